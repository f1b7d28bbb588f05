import math

import pytest

from trimssd import cli
from trimssd.errors import CapacityError
from trimssd.harness import experiments as ex
from trimssd.harness.config import ExperimentConfig, load_config
from trimssd.harness.output import read_csv, render_csv, write_csv
from trimssd.harness.reproduce import PAPER_ANALYTIC, Check, analytic_matches, overall_ok, reproduce

TOML = """
kind = "utilization"

[workload]
u = 200
q = [0.1, 0.3]
size = { kind = "uniform", lo = 1, hi = 8 }

[run]
replicas = 2
warmup = 1000
measure = 20000
seed = 9
"""


@pytest.fixture
def toml_file(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(TOML)
    return path


def test_config_from_toml_with_overrides(toml_file):
    c = load_config(toml_file)
    assert (c.u, c.q, c.replicas, c.seed) == (200, (0.1, 0.3), 2, 9)
    assert c.size_dist.upper == 8
    c2 = load_config(toml_file, seed=10, replicas=None)
    assert c2.seed == 10 and c2.replicas == 2
    assert c.digest() != c2.digest()


def test_digest_ignores_execution_settings(toml_file):
    a = load_config(toml_file, workers=1, out="x")
    b = load_config(toml_file, workers=3, out="y")
    assert a.digest() == b.digest()
    assert "workers" not in a.effective()


def test_quick_and_full_protocols():
    quick = ExperimentConfig()
    full = ExperimentConfig(full=True)
    assert (quick.replicas, quick.warmup, quick.measure) == (8, 100_000, 1_000_000)
    assert (full.replicas, full.warmup, full.measure) == (64, 1_000_000, 9_000_000)
    wa = ExperimentConfig(kind="wa-sim", full=True)
    assert (wa.replicas, wa.warmup_factor, wa.measure_factor) == (8, 4, 10)


@pytest.mark.parametrize("bad", [
    dict(kind="nope"),
    dict(replicas=0),
    dict(q=0.5),
    dict(size={"kind": "fixed", "b": 0}),
    dict(kind="wa-sim", n_p=(8,), object_pages=3),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig(**bad)


def test_unknown_toml_keys_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[workload]\nbogus = 1\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_csv_round_trip(tmp_path):
    config = ExperimentConfig(q=(0.2,))
    rows = [{"a": 0.1, "b": None, "c": 3}]
    path = write_csv(tmp_path / "x.csv", ["a", "b", "c"], rows, config=config,
                     provenance={"a": "analytic"}, extra={"note": "hi"})
    meta, back = read_csv(path)
    assert meta["master_seed"] == str(config.seed)
    assert meta["config_sha256"] == config.digest()
    assert meta["provenance"] == "a=analytic, b=parameter, c=parameter"
    assert meta["note"] == "hi" and meta["mode"] == "quick"
    assert back == [{"a": "0.1", "b": None, "c": "3"}]
    assert render_csv(["a"], [{"a": 1 / 3}]) == render_csv(["a"], [{"a": 1 / 3}])


def test_run_tasks_preserves_order():
    items = list(range(7))
    assert ex.run_tasks(math.factorial, items, workers=2) == [math.factorial(i) for i in items]
    assert ex.run_tasks(math.factorial, items) == [math.factorial(i) for i in items]


def test_simulated_utilization_is_deterministic(toml_file):
    c = load_config(toml_file)
    rows_a, _ = ex.simulate_utilization(c)
    rows_b, _ = ex.simulate_utilization(load_config(toml_file, workers=2))
    assert rows_a == rows_b
    assert all(r["replicas"] == 2 for r in rows_a)


def test_histogram_rows_are_normalized(toml_file):
    c = load_config(toml_file)
    _, merged = ex.simulate_utilization(c)
    stats = merged[0.3]
    from trimssd import analytics

    m = analytics.page_moments(c.u, 0.3, c.size_dist)
    for w in (1, 4, 7):
        hist = ex.histogram_rows(stats, m.mean_pages, m.var_pages, w)
        assert abs(sum(r["density"] for r in hist) * w - 1) <= 1e-9


def test_predictions_in_object_units():
    # 4-page objects in 32-page blocks behave like single pages in 8-page blocks
    assert ex.predictions(1280, 32, 0.2, 4, 0.1) == ex.predictions(1280, 8, 0.2, 1, 0.1)
    xiang, hu = ex.predictions(1280, 1, 0.2, 1, 0.1)
    assert hu is None and abs(xiang - 1.936) <= 0.001


def test_analytic_matching_rule():
    assert analytic_matches(571.4286, 571.43)
    assert not analytic_matches(571.4149, 571.43)
    assert overall_ok([Check("a", True), Check("b", False, advisory=True)])
    assert not overall_ok([Check("a", False)])
    assert Check("b", False, "x", advisory=True).line().startswith("WARN")


def test_cli_analyze_writes_table(tmp_path, capsys):
    rc = cli.main(["analyze", "--out", str(tmp_path)])
    assert rc == 0
    meta, rows = read_csv(tmp_path / "analyze.csv")
    assert len(rows) == 6
    q3 = next(r for r in rows if float(r["q"]) == 0.3)
    assert round(float(q3["mean_pages"]), 2) == PAPER_ANALYTIC["table1"][0.3][2]


def test_cli_predict_wa(tmp_path):
    assert cli.main(["predict-wa", "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "wa_predict.csv")
    assert rows[0]["n_p"] == "1" and rows[0]["hu_wa"] is None
    assert len(rows) == 9


def test_cli_sim_util_from_config(tmp_path, toml_file):
    assert cli.main(["sim-util", "--config", str(toml_file), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "utilization.csv").exists()
    assert (tmp_path / "histogram_q0.1.csv").exists() and (tmp_path / "histogram_q0.3.csv").exists()


def test_cli_sim_wa_small(tmp_path):
    cfg = tmp_path / "wa.toml"
    cfg.write_text("[device]\nn_blocks = 64\nn_p = [1, 8]\n[run]\nreplicas = 1\n")
    assert cli.main(["sim-wa", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "wa.csv")
    assert float(rows[0]["sim_wa"]) == 1.0 and float(rows[1]["sim_wa"]) > 1.0


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["frobnicate"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        cli.main(["reproduce", "table9"])
    assert e.value.code == 1
    assert cli.main(["analyze", "--config", str(tmp_path / "missing.toml")]) == 1
    assert cli.main(["analyze", "--replicas", "0"]) == 1

    def boom(config):
        raise CapacityError("full")

    monkeypatch.setattr(ex, "analyze_rows", boom)
    assert cli.main(["analyze", "--out", str(tmp_path)]) == 3


def test_cli_reproduce_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "reproduce", lambda *a, **k: ([Check("x", False, "diff")], []))
    assert cli.main(["reproduce", "table1", "--out", str(tmp_path)]) == 2


def test_reproduce_fig1(tmp_path):
    checks, paths = reproduce("fig1", seed=3, replicas=2, out=str(tmp_path))
    assert overall_ok(checks), [c.line() for c in checks]
    meta, rows = read_csv(paths[0])
    assert meta["target"] == "fig1" and meta["bin_pages"] == "32"
    mass = sum(float(r["density"]) for r in rows) * 32
    assert abs(mass - 1) <= 1e-6
    assert (tmp_path / "fig1_report.txt").read_text().splitlines()[-1].startswith("PASS fig1")


def test_reproduce_rejects_unknown_target(tmp_path):
    with pytest.raises(ValueError):
        reproduce("table4", out=str(tmp_path))

"""Canned reproduction targets with embedded reference values.

Each target runs a fixed configuration, writes its CSV outputs and a plain
text report, and returns a list of :class:`Check` results.  Advisory checks
are reported but never affect the exit status.
"""

import os
from dataclasses import dataclass

from trimssd.harness import experiments as ex
from trimssd.harness.config import PAPER_NP, PAPER_QS, ExperimentConfig
from trimssd.harness.output import write_csv

TARGETS = ("table1", "table2", "table3", "table5", "fig1", "fig2", "fig3", "fig5")

SIZES = {
    "table1": {"kind": "fixed", "b": 32},
    "table2": {"kind": "uniform", "lo": 1, "hi": 32},
    "table3": {"kind": "binomial", "n": 32, "p": 0.4},
}
FIG_OF = {"fig1": "table1", "fig2": "table2", "fig3": "table3"}

QUANTITIES = ("mean_objects", "sd_objects", "mean_pages", "sd_pages")

# reference tables: q -> (mean objects, sd objects, mean pages, sd pages),
# analytic and simulated columns as printed
PAPER_ANALYTIC = {
    "table1": {
        0.05: (947.37, 7.25, 30315.79, 232.15),
        0.1: (888.89, 10.54, 28444.44, 337.31),
        0.2: (750.00, 15.81, 24000.00, 505.96),
        0.3: (571.43, 20.70, 18285.71, 662.46),
        0.4: (333.33, 25.82, 10666.67, 826.24),
        0.45: (181.82, 28.60, 5818.18, 915.32),
    },
    "table2": {
        0.05: (947.37, 7.25, 15631.58, 308.37),
        0.1: (888.89, 10.54, 14666.67, 325.62),
        0.2: (750.00, 15.81, 12375.00, 363.32),
        0.3: (571.43, 20.70, 9428.57, 406.69),
        0.4: (333.33, 25.82, 5500.00, 458.17),
        0.45: (181.82, 28.60, 3000.00, 488.11),
    },
    "table3": {
        0.05: (947.37, 7.25, 12126.32, 126.09),
        0.1: (888.89, 10.54, 11377.78, 158.21),
        0.2: (750.00, 15.81, 9600.00, 216.15),
        0.3: (571.43, 20.70, 7314.29, 273.14),
        0.4: (333.33, 25.82, 4266.67, 334.35),
        0.45: (181.82, 28.60, 2327.27, 368.03),
    },
}
PAPER_SIMULATED = {
    "table1": {
        0.05: (947.37, 7.24, 30315.80, 231.80),
        0.1: (888.89, 10.54, 28444.37, 337.37),
        0.2: (750.01, 15.82, 24000.37, 506.18),
        0.3: (571.47, 20.73, 18287.10, 663.29),
        0.4: (333.43, 25.83, 10669.70, 826.46),
        0.45: (181.89, 28.62, 5820.40, 915.93),
    },
    "table2": {
        0.05: (947.36, 7.27, 15631.33, 307.92),
        0.1: (888.92, 10.53, 14667.03, 325.63),
        0.2: (750.00, 15.80, 12374.67, 363.42),
        0.3: (571.41, 20.70, 9429.00, 406.49),
        0.4: (333.35, 25.79, 5500.13, 457.71),
        0.45: (181.81, 28.58, 2999.85, 487.65),
    },
    "table3": {
        0.05: (947.36, 7.27, 12126.39, 126.06),
        0.1: (888.88, 10.53, 11377.73, 158.10),
        0.2: (750.01, 15.80, 9600.25, 216.00),
        0.3: (571.37, 20.68, 7313.46, 272.77),
        0.4: (333.32, 25.79, 4266.57, 334.03),
        0.45: (181.84, 28.63, 2327.60, 368.36),
    },
}

# n_p -> (simulation, modified Xiang, Hu); Hu is undefined at one page per block
PAPER_WA = {
    1: (1.000, 1.936, None),
    2: (1.191, 1.937, 1.000),
    4: (1.432, 1.938, 1.065),
    8: (1.631, 1.938, 1.274),
    16: (1.771, 1.938, 1.628),
    32: (1.853, 1.938, 1.732),
    64: (1.896, 1.938, 1.793),
    128: (1.918, 1.938, 1.828),
    256: (1.929, 1.938, 1.847),
}

ANALYTIC_ROUNDING_TOL = 0.005
# relative tolerances of simulated vs analytic values, widened in quick mode
SIM_TOL = {"mean_objects": 0.001, "mean_pages": 0.003, "sd_objects": 0.02, "sd_pages": 0.02}
QUICK_WIDEN = 4
XIANG_TOL = 0.001
HU_TOL = 0.01
# accepted when the only gap is the p* indexing reading of the last entry
HU_FALLBACK_TOL = 0.05
WA_SIM_TOL = 0.05
HIST_BIN_MASS_TOL = 1e-6
HIST_TV_TOL = 0.03


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""
    advisory: bool = False

    def line(self):
        status = "PASS" if self.ok else ("WARN" if self.advisory else "FAIL")
        tag = " (advisory)" if self.advisory else ""
        return f"{status} {self.name}{tag}: {self.detail}"


def overall_ok(checks):
    return all(c.ok for c in checks if not c.advisory)


def analytic_matches(value, printed):
    return abs(round(value, 2) - printed) <= ANALYTIC_ROUNDING_TOL + 1e-9


def _base_config(target, seed, full, replicas, workers, out):
    kind = "wa-sim" if target in ("table5", "fig5") else "utilization"
    kw = dict(kind=kind, seed=seed, full=full, replicas=replicas, workers=workers, out=out)
    if kind == "utilization":
        kw["size"] = SIZES[FIG_OF.get(target, target)]
        kw["u"] = 1000
        kw["q"] = (0.2,) if target in FIG_OF else PAPER_QS
    else:
        kw.update(n_blocks=1280, n_p=PAPER_NP, spare_factor=0.2, object_pages=1, wa_q=0.1)
    return ExperimentConfig(**{k: v for k, v in kw.items() if v is not None})


def _utilization_table(target, config):
    rows, merged = ex.simulate_utilization(config)
    widen = 1 if config.full else QUICK_WIDEN
    checks = []
    for row in rows:
        q = row["q"]
        for i, name in enumerate(QUANTITIES):
            analytic = row[f"{name}_analytic"]
            printed = PAPER_ANALYTIC[target][q][i]
            row[f"{name}_paper_analytic"] = printed
            row[f"{name}_paper_sim"] = PAPER_SIMULATED[target][q][i]
            checks.append(Check(
                f"{target} q={q} {name} analytic",
                analytic_matches(analytic, printed),
                f"{analytic:.4f} vs printed {printed:.2f}",
            ))
            sim = row[f"{name}_sim"]
            tol = SIM_TOL[name] * widen
            rel = abs(sim - analytic) / analytic
            checks.append(Check(
                f"{target} q={q} {name} simulated",
                rel <= tol,
                f"{sim:.4f} vs analytic {analytic:.4f} (rel {rel:.2e}, tol {tol:.1e})",
            ))
    columns = ["q", "size_dist"]
    for name in QUANTITIES:
        columns += [f"{name}_analytic", f"{name}_sim", f"{name}_se",
                    f"{name}_paper_analytic", f"{name}_paper_sim"]
    columns.append("replicas")
    prov = ex.provenance(columns)
    prov.update({c: "paper" for c in columns if "_paper_" in c})
    path = os.path.join(config.out, f"{target}.csv")
    write_csv(path, columns, rows, config=config, provenance=prov, extra={"target": target})
    return checks, [path]


def _figure(target, config):
    from trimssd import analytics

    rows, merged = ex.simulate_utilization(config)
    q = config.q[0]
    stats = merged[q]
    m = analytics.page_moments(config.u, q, config.size_dist)
    hist = ex.histogram_rows(stats, m.mean_pages, m.var_pages, config.bin_pages)
    w = config.bin_pages
    mass = sum(r["density"] for r in hist) * w
    tv = 0.5 * sum(abs(r["density"] - r["analytic_density"]) for r in hist) * w
    peak = max(hist, key=lambda r: r["analytic_density"])["bin_center"]
    checks = [
        Check(f"{target} histogram mass", abs(mass - 1) <= HIST_BIN_MASS_TOL, f"sum(density)*bin = {mass:.9f}"),
        Check(f"{target} overlay peak", abs(peak - m.mean_pages) <= w,
              f"analytic peak bin at {peak:.1f}, mean {m.mean_pages:.2f}"),
        Check(f"{target} simulated vs Gaussian", tv <= HIST_TV_TOL, f"binned TV distance {tv:.4f} (tol {HIST_TV_TOL})"),
    ]
    path = os.path.join(config.out, f"{target}_histogram.csv")
    prov = {"bin_center": "parameter", "density": "simulated", "analytic_density": "analytic"}
    write_csv(path, ex.HIST_COLUMNS, hist, config=config, provenance=prov,
              extra={"target": target, "q": q, "bin_pages": w})
    return checks, [path]


def _is_monotone(values, slack=0.0):
    return all(b >= a - slack for a, b in zip(values, values[1:]))


def _wa_checks(target, config, rows):
    checks = []
    by_np = {r["n_p"]: r for r in rows}
    if target == "table5":
        for n_p, (sim_p, xiang_p, hu_p) in PAPER_WA.items():
            r = by_np[n_p]
            checks.append(Check(f"table5 n_p={n_p} xiang", abs(r["xiang_wa"] - xiang_p) <= XIANG_TOL,
                                f"{r['xiang_wa']:.4f} vs printed {xiang_p:.3f}"))
            if hu_p is None:
                checks.append(Check(f"table5 n_p={n_p} hu", r["hu_wa"] is None, "undefined at one page per block"))
            else:
                gap = abs(r["hu_wa"] - hu_p)
                note = "" if gap <= HU_TOL else f" (outside {HU_TOL}, fallback tol {HU_FALLBACK_TOL})"
                checks.append(Check(f"table5 n_p={n_p} hu", gap <= HU_FALLBACK_TOL,
                                    f"{r['hu_wa']:.4f} vs printed {hu_p:.3f}{note}"))
            if n_p == 1:
                checks.append(Check("table5 n_p=1 simulation exact", r["sim_wa"] == 1.0, f"{r['sim_wa']!r}"))
            else:
                checks.append(Check(f"table5 n_p={n_p} simulation", abs(r["sim_wa"] - sim_p) <= WA_SIM_TOL,
                                    f"{r['sim_wa']:.4f} +/- {r['sim_wa_se']:.4f} vs printed {sim_p:.3f}",
                                    advisory=not config.full))
        sims = [by_np[n]["sim_wa"] for n in config.n_p]
        checks.append(Check("table5 simulation trend", _is_monotone(sims), "non-decreasing in n_p",
                            advisory=not config.full))
    else:
        sims = [by_np[n]["sim_wa"] for n in config.n_p]
        checks.append(Check("fig5 simulation monotone", _is_monotone(sims),
                            " ".join(f"{s:.3f}" for s in sims)))
        for n_p in config.n_p:
            if n_p < 16:
                continue
            r = by_np[n_p]
            ok = r["hu_wa"] <= r["sim_wa"] <= r["xiang_wa"]
            checks.append(Check(f"fig5 n_p={n_p} bracketed", ok,
                                f"hu {r['hu_wa']:.4f} <= sim {r['sim_wa']:.4f} <= xiang {r['xiang_wa']:.4f}"))
    return checks


def _wa_target(target, config):
    rows = ex.wa_rows(config)
    for r in rows:
        paper = PAPER_WA.get(r["n_p"])
        if paper:
            r["paper_sim_wa"], r["paper_xiang_wa"], r["paper_hu_wa"] = paper
    columns = ex.WA_COLUMNS + ["paper_sim_wa", "paper_xiang_wa", "paper_hu_wa"]
    prov = ex.provenance(columns)
    prov.update({c: "paper" for c in columns if c.startswith("paper_")})
    name = "table5.csv" if target == "table5" else "fig5_series.csv"
    path = os.path.join(config.out, name)
    write_csv(path, columns, rows, config=config, provenance=prov, extra={"target": target})
    return _wa_checks(target, config, rows), [path]


def reproduce(target, seed=None, full=False, replicas=None, workers=None, out="results"):
    """Run one target; return ``(checks, written_paths)``."""
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
    config = _base_config(target, seed, full, replicas, workers, out)
    if target in SIZES:
        checks, paths = _utilization_table(target, config)
    elif target in FIG_OF:
        checks, paths = _figure(target, config)
    else:
        checks, paths = _wa_target(target, config)
    report = os.path.join(out, f"{target}_report.txt")
    lines = [c.line() for c in checks]
    verdict = "PASS" if overall_ok(checks) else "FAIL"
    lines.append(f"{verdict} {target}: {sum(c.ok for c in checks)}/{len(checks)} checks passed")
    with open(report, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return checks, paths + [report]


"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 reproduction comparison failed,
3 capacity or contract violation.
"""

import argparse
import os
import sys

from trimssd.errors import CapacityError, ContractViolation, ModelBreakdownError, UnsupportedLayoutError
from trimssd.harness import experiments as ex
from trimssd.harness.config import load_config
from trimssd.harness.output import write_csv
from trimssd.harness.reproduce import TARGETS, overall_ok, reproduce

EXIT_OK, EXIT_USAGE, EXIT_COMPARE, EXIT_VIOLATION = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="TOML experiment file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--replicas", type=int, help="Monte-Carlo replicas per cell")
    p.add_argument("--full", action="store_true", default=None, help="full-length protocol")
    p.add_argument("--out", help="output directory (default: results)")
    p.add_argument("--workers", type=int, help="parallel worker processes")


def build_parser():
    parser = _Parser(prog="trimssd", description="Trim-aware SSD utilization and write-amplification laboratory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("analyze", "analytic utilization moments over the q sweep"),
        ("sim-util", "Monte-Carlo utilization sweep with histogram files"),
        ("sim-wa", "FTL write-amplification ladder with model columns"),
        ("predict-wa", "model write-amplification predictions only"),
    ]:
        _common(sub.add_parser(name, help=help_))
    rp = sub.add_parser("reproduce", help="run a canned target and compare with reference values")
    rp.add_argument("target", choices=TARGETS)
    _common(rp)
    return parser


_KIND = {"analyze": "analyze", "sim-util": "utilization", "sim-wa": "wa-sim", "predict-wa": "wa-predict"}


def _config(args):
    return load_config(args.config, kind=_KIND[args.command], seed=args.seed, replicas=args.replicas,
                       full=args.full, out=args.out, workers=args.workers)


def _emit(path, columns, rows, config, **extra):
    write_csv(path, columns, rows, config=config, provenance=ex.provenance(columns), extra=extra or None)
    print(path)


def run(args):
    if args.command == "reproduce":
        checks, paths = reproduce(args.target, seed=args.seed, full=bool(args.full), replicas=args.replicas,
                                  workers=args.workers, out=args.out or "results")
        for c in checks:
            print(c.line())
        for p in paths:
            print(f"wrote {p}")
        ok = overall_ok(checks)
        print(f"{'PASS' if ok else 'FAIL'} {args.target}")
        return EXIT_OK if ok else EXIT_COMPARE

    config = _config(args)
    out = config.out
    if args.command == "analyze":
        _emit(os.path.join(out, "analyze.csv"), ex.ANALYZE_COLUMNS, ex.analyze_rows(config), config)
    elif args.command == "sim-util":
        from trimssd import analytics

        rows, merged = ex.simulate_utilization(config)
        _emit(os.path.join(out, "utilization.csv"), ex.UTIL_COLUMNS, rows, config)
        for q, stats in merged.items():
            m = analytics.page_moments(config.u, q, config.size_dist)
            hist = ex.histogram_rows(stats, m.mean_pages, m.var_pages, config.bin_pages)
            _emit(os.path.join(out, f"histogram_q{q:g}.csv"), ex.HIST_COLUMNS, hist, config,
                  q=q, bin_pages=config.bin_pages)
    elif args.command == "sim-wa":
        _emit(os.path.join(out, "wa.csv"), ex.WA_COLUMNS, ex.wa_rows(config), config)
    else:
        _emit(os.path.join(out, "wa_predict.csv"), ex.PREDICT_COLUMNS, ex.predict_rows(config), config)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (CapacityError, ContractViolation, UnsupportedLayoutError) as exc:
        print(f"trimssd: violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ModelBreakdownError, ValueError, OSError) as exc:
        print(f"trimssd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

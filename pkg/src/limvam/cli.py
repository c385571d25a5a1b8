"""Command-line interface: ``limvam fit | simulate | bench``.

Exit codes: 0 success, 1 data or numerical error, 2 usage error.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .benchmark import SUITES, run_suite
from .exceptions import LimvamError
from .synth import PRESETS, check_assumptions, simulate

METHODS = ("pairwise-lr", "pairwise-fc", "ica-j")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="limvam", description="Multi-view linear causal discovery.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit a dataset described by a manifest")
    fit.add_argument("--data", required=True, help="path to manifest.json")
    fit.add_argument("--method", required=True, choices=METHODS)
    fit.add_argument("--ordering", choices=("shared", "per-view"), default="shared",
                     help="one ordering for all views or one per view (ica-j only)")
    fit.add_argument("--out", required=True, help="output directory")
    fit.add_argument("--seed", type=int, default=0, help="recorded in the diagnostics")
    fit.add_argument("--truth", help="directory with ground truth (writes metrics.csv)")

    sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    sim.add_argument("--preset", default="figure1-gaussian",
                     help=f"one of: {', '.join(PRESETS)}")
    sim.add_argument("--m", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--n", type=int, default=1000)
    sim.add_argument("--density", type=float, default=1.0)
    sim.add_argument("--sources", help="comma-separated kinds, e.g. gaussian,laplace,gennorm(1.5)")
    sim.add_argument("--noise-diversity-violations", type=int, default=0)
    sim.add_argument("--sparsify", type=int, default=0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output directory")

    bench = sub.add_parser("bench", help="run a benchmark suite")
    bench.add_argument("--suite", required=True, choices=SUITES)
    bench.add_argument("--seeds", type=int, default=5)
    bench.add_argument("--jobs", type=int, default=1,
                       help="worker processes (LIMVAM_THREADS overrides)")
    bench.add_argument("--out", required=True, help="output CSV")
    return parser


def cmd_fit(args):
    from .ica_limvam import fit_ica
    from .estimators import fit_pairwise
    from .io import load_dataset, load_ground_truth, save_result

    if args.ordering == "per-view" and args.method != "ica-j":
        print("limvam fit: --ordering per-view requires --method ica-j", file=sys.stderr)
        return 2
    X = load_dataset(args.data)
    t0 = time.perf_counter()
    if args.method == "ica-j":
        result = fit_ica(X, "per_view" if args.ordering == "per-view" else "shared")
    else:
        result = fit_pairwise(X, args.method.split("-")[1])
    elapsed = time.perf_counter() - t0
    result.diagnostics["method"] = args.method
    result.diagnostics["seed"] = args.seed
    truth = load_ground_truth(args.truth) if args.truth else None
    save_result(result, args.out, truth=truth, seed=args.seed, estimator=args.method)
    print(f"{args.method}: p={X.p} m={X.m} n={X.n} time={elapsed:.3f}s -> {args.out}")
    return 0


def cmd_simulate(args):
    from .io import save_dataset, save_ground_truth

    if args.preset not in PRESETS:
        print(f"limvam simulate: unknown preset {args.preset!r}; choose from "
              f"{', '.join(PRESETS)}", file=sys.stderr)
        return 2
    sources = args.sources.split(",") if args.sources else None
    X, truth = simulate(args.preset, args.n, args.seed, m=args.m, p=args.p,
                        density=args.density, sources=sources,
                        noise_diversity_violations=args.noise_diversity_violations,
                        sparsify=args.sparsify)
    out = Path(args.out)
    provenance = {"preset": args.preset, "seed": args.seed, "density": args.density,
                  "sources": sources, "noise_diversity_violations":
                  args.noise_diversity_violations, "sparsify": args.sparsify}
    save_dataset(X, out, provenance=provenance)
    save_ground_truth(truth, out)
    report = check_assumptions(truth)
    from .io import write_json
    write_json(out / "assumptions.json", report.as_dict())
    m, p, n = X.shape
    print(f"{args.preset}: m={m} p={p} n={n} seed={args.seed} -> {out}")
    return 0


def cmd_bench(args):
    rows = run_suite(args.suite, args.seeds, args.jobs, args.out)
    failed = sum(1 for r in rows if r["error"])
    print(f"{args.suite}: {len(rows)} rows, {failed} failed -> {args.out}")
    return 1 if rows and failed == len(rows) else 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"fit": cmd_fit, "simulate": cmd_simulate, "bench": cmd_bench}[args.command]
    try:
        return handler(args)
    except (LimvamError, ValueError, KeyError, OSError, np.linalg.LinAlgError) as exc:
        print(f"limvam {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

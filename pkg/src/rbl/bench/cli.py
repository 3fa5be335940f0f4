"""Command line entry point: ``rbl sweep|convergence|runtime``."""
import argparse
import sys
from pathlib import Path

from .config import ESTIMATORS, ExperimentConfig
from .harness import run_convergence, run_runtime, run_sweep
from .io import write_convergence_csv, write_manifest, write_runtime_csv, write_sweep_csv


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _names(text):
    names = tuple(v for v in text.replace(",", " ").split())
    bad = [n for n in names if n not in ESTIMATORS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown estimator(s) {bad}; choose from {ESTIMATORS}")
    return names


def _common(p, default_out):
    p.add_argument("--scenario", choices=("stationary", "moving"), default="stationary")
    p.add_argument("--sigma", type=_floats, default=None, help="noise levels in m, e.g. '1e-3,1e-2,1'")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimators", type=_names, default=("gabp", "ls"))
    p.add_argument("--out", default=default_out, help="CSV path; manifest and figure go next to it")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--jmax", type=int, default=30)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--coupling", type=float, default=10.0, help="sigma_eps / sigma_w")
    p.add_argument("--conformation", default=None, help="file: 'M N', M anchor rows, N sensor rows")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-plot", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="rbl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sw = sub.add_parser("sweep", help="RMSE versus noise level")
    _common(sw, "results/sweep.csv")
    sw.add_argument("--timing", action="store_true", help="fill mean_ms (breaks byte-identical reruns)")
    cv = sub.add_parser("convergence", help="median per-iteration error traces")
    _common(cv, "results/convergence.csv")
    rt = sub.add_parser("runtime", help="median wall time per stage")
    _common(rt, "results/runtime.csv")
    rt.add_argument("--repeats", type=int, default=20)
    return parser


def config_from_args(args):
    sigmas = args.sigma
    if sigmas is None:
        sigmas = (1.0, 1e-2) if args.command == "convergence" else ExperimentConfig.sigmas
    estimators = args.estimators
    if args.command == "convergence" and estimators == ("gabp", "ls"):
        estimators = ("gabp",)
    return ExperimentConfig(
        scenario=args.scenario,
        sigmas=sigmas,
        trials=args.trials,
        seed=args.seed,
        estimators=estimators,
        rho=args.rho,
        j_max=args.jmax,
        tol=args.tol,
        coupling=args.coupling,
        conformation_path=args.conformation,
        out=args.out,
        workers=args.workers,
        timing=getattr(args, "timing", False),
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(f"rbl: {exc}", file=sys.stderr)
        return 2
    out = Path(config.out)
    manifest = out.with_suffix(".manifest.json")
    figure = out.with_suffix(".png")

    if args.command == "sweep":
        records = run_sweep(config)
        write_sweep_csv(records, out)
        diverged = sum(r.diverged for r in records if r.family == "position")
        write_manifest(config, manifest, "sweep", {"diverged_trials": diverged})
        if not args.no_plot:
            from .plotting import plot_sweep

            plot_sweep(records, figure)
        for r in records:
            print(f"sigma={r.sigma:<8g} {r.estimator:5s} {r.family:23s} rmse={r.rmse:.4e} {r.unit}")
    elif args.command == "convergence":
        result = run_convergence(config)
        write_convergence_csv(result, out)
        write_manifest(
            config,
            manifest,
            "convergence",
            {"diverged_trials": {f"{s:g}/{n}": c for (s, n), c in result.diverged.items()}},
        )
        if not args.no_plot:
            from .plotting import plot_convergence

            plot_convergence(result, figure)
        for (sigma, name, stage), trace in sorted(result.traces.items()):
            print(f"sigma={sigma:<8g} {name:5s} {stage:14s} first={trace[0]:.3e} last={trace[-1]:.3e}")
    else:
        summary = run_runtime(config, repeats=args.repeats)
        write_runtime_csv(summary, out)
        write_manifest(config, manifest, "runtime", {"repeats": args.repeats})
        if not args.no_plot:
            from .plotting import plot_runtime

            plot_runtime(summary, figure)
        for stage, ms in summary.median_ms.items():
            print(f"{stage:9s} median {ms:8.3f} ms  (M={summary.M}, N={summary.N})")
        print(f"position with 2M anchors: {summary.position_ms_2m:.3f} ms, ratio {summary.doubling_ratio:.2f}")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

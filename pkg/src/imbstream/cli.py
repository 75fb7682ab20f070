"""Command-line entry point: ``imbstream {run,matrix,bins,report}``.

Failures exit nonzero after printing one line to stderr of the form
``imbstream: error kind=<kind> message=<text>``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .density import DISTANCES, KERNELS, BinStructure, SmoothedDensity, dump_density_csv, process_window
from .errors import ConfigError, ImbStreamError
from .experiment import DATASETS, RunConfig, dataset_spec, run_experiment, run_matrix
from .learner import BASES
from .stream import MISSING_POLICIES, TARGET_TRANSFORMS, StreamSpec, open_stream
from .tuner import MODES


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> tuple:
    if text.strip().lower() in ("", "none"):
        return ()
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_stream_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    g.add_argument("--dataset", default="california",
                   help=f"preset name ({', '.join(DATASETS)}) or 'custom' with --data-path")
    g.add_argument("--data-dir", help="directory holding the preset files (default ./data or $IMBSTREAM_DATA)")
    g.add_argument("--data-path", help="CSV file; overrides the preset's file")
    g.add_argument("--target-col", help="target column name, or index if numeric")
    g.add_argument("--drop-indices", type=_ints,
                   help="comma-separated 0-based rows to skip; 'none' clears the preset's list")
    g.add_argument("--max-examples", type=int)
    g.add_argument("--target-transform", choices=TARGET_TRANSFORMS)
    g.add_argument("--missing-policy", choices=MISSING_POLICIES)
    g.add_argument("--delimiter")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model and tuning")
    g.add_argument("--r-grid", type=_floats, help="bin ranges, e.g. 0,0.1,0.2,0.5,1")
    g.add_argument("--lambda-grid", type=_floats, help="shrinkage strengths")
    g.add_argument("--h-grid", type=_floats, help="KDE bandwidths")
    g.add_argument("--w-grid", type=_floats, help="KDE window sizes")
    g.add_argument("--kde-distance", choices=DISTANCES, default="raw",
                   help="measure kernel distances in target units or in bins")
    g.add_argument("--kernel", choices=KERNELS, default="gaussian")
    g.add_argument("--tune-window", type=int, help="tuning phase length (default min(n/8, 3000))")
    g.add_argument("--deploy-window", type=int, help="deployment phase length (default: four tuning phases)")
    g.add_argument("--adopt", choices=("state", "params"), default="state",
                   help="after tuning, deploy the winning model itself or only its settings")
    g.add_argument("--seed", type=int, default=0, help="recorded with the run; runs are deterministic")
    g.add_argument("--out", default="results", help="output directory")
    g.add_argument("--verbose", "-v", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imbstream",
                                     description="Stream regression trees with density-based weighting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one variant on one dataset")
    _add_stream_args(p)
    p.add_argument("--base", choices=BASES, default="ht")
    p.add_argument("--mode", choices=MODES, default="none")
    _add_model_args(p)

    p = sub.add_parser("matrix", help="all eight variants on each dataset, plus table.csv")
    p.add_argument("datasets", nargs="*", help="preset names")
    p.add_argument("--data-dir")
    p.add_argument("--jobs", type=int, default=1, help="runs to execute in parallel")
    _add_model_args(p)

    p = sub.add_parser("bins", help="bin counts and smoothed density of a dataset's targets")
    _add_stream_args(p)
    p.add_argument("--r", type=float, default=0.2, help="bin range (0: one bin per distinct target)")
    p.add_argument("--h", type=float, default=10.0, help="bandwidth")
    p.add_argument("--kernel", choices=KERNELS, default="gaussian")
    p.add_argument("--kde-distance", choices=DISTANCES, default="raw")
    p.add_argument("--out", default="results")
    p.add_argument("--verbose", "-v", action="store_true")

    p = sub.add_parser("report", help="render PNG figures from a results directory")
    p.add_argument("results", nargs="?", default="results")
    p.add_argument("--verbose", "-v", action="store_true")
    return parser


def _stream_spec(args) -> StreamSpec:
    target = args.target_col
    if target is not None and target.lstrip("-").isdigit():
        target = int(target)
    overrides = dict(target=target, drop_indices=args.drop_indices, max_examples=args.max_examples,
                     target_transform=args.target_transform, missing_policy=args.missing_policy,
                     delimiter=args.delimiter)
    if args.dataset == "custom":
        if args.data_path is None or target is None:
            raise ConfigError("--dataset custom needs --data-path and --target-col")
        return StreamSpec(args.data_path, **{k: v for k, v in overrides.items() if v is not None})
    spec = dataset_spec(args.dataset, args.data_dir, **overrides)
    if args.data_path is not None:
        spec = StreamSpec(**{**spec.__dict__, "path": args.data_path})
    return spec


def _grids(args) -> dict:
    grids = {}
    for name, value in (("r", args.r_grid), ("lam", args.lambda_grid), ("h", args.h_grid)):
        if value is not None:
            grids[name] = value
    if args.w_grid is not None:
        if any(w != int(w) for w in args.w_grid):
            raise ConfigError("--w-grid takes whole numbers")
        grids["window"] = tuple(int(w) for w in args.w_grid)
    return grids


def _run_config(args, **kw) -> RunConfig:
    return RunConfig(grids=_grids(args), tune_window=args.tune_window, deploy_window=args.deploy_window,
                     adopt=args.adopt, kde_distance=args.kde_distance, kernel=args.kernel,
                     seed=args.seed, out=args.out, verbose=args.verbose, **kw)


def _cmd_run(args) -> int:
    cfg = _run_config(args, stream=_stream_spec(args), dataset=args.dataset,
                      base=args.base, mode=args.mode)
    res = run_experiment(cfg)
    print(f"{cfg.model_name}\tMAE {res.mae:.4f}\tRMSE {res.rmse:.4f}\tR2 {res.r2:.4f}\t"
          f"({res.n_examples} examples)")
    return 0


def _cmd_matrix(args) -> int:
    if not args.datasets:
        print("nothing to run: empty dataset list")
        return 0
    template = _run_config(args, stream=StreamSpec("unset"))
    results = run_matrix(args.datasets, template, args.data_dir, jobs=args.jobs)
    for res in results:
        print(f"{res.config.dataset}\t{res.config.model_name}\tMAE {res.mae:.4f}\t"
              f"RMSE {res.rmse:.4f}\tR2 {res.r2:.4f}")
    print(f"table written to {Path(args.out) / 'table.csv'}")
    return 0


def _cmd_bins(args) -> int:
    spec = _stream_spec(args)
    targets = [ex.target for ex in open_stream(spec)]
    if not targets:
        raise ConfigError(f"{spec.path} produced no examples")
    bins = BinStructure(args.r, min(targets), max(targets)) if args.r > 0 else BinStructure(0.0)
    density = SmoothedDensity(bins, args.h, args.kernel, args.kde_distance)
    process_window(density, targets)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.dataset}_bins.csv"
    dump_density_csv(density, path)
    print(f"{bins.n_bins} bins written to {path}")
    return 0


def _cmd_report(args) -> int:
    from .plotting import render_report

    for p in render_report(args.results):
        print(p)
    return 0


COMMANDS = {"run": _cmd_run, "matrix": _cmd_matrix, "bins": _cmd_bins, "report": _cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ImbStreamError as exc:
        kind, msg = exc.kind, str(exc)
    except OSError as exc:
        kind, msg = "io", str(exc)
    print(f"imbstream: error kind={kind} message={msg}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())

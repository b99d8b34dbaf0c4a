"""Command-line entry point: ``spatial-trees {synth,dimest,build,run}``.

Exit codes: 0 on success, 2 for bad arguments, configs or data, 1 for
anything unexpected.
"""

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import config as cfg
from .covdim import dimension_profiles, write_profiles_csv
from .errors import SpatialTreeError
from .harness import run_experiment, write_report
from .synth import GENERATORS, generate, read_csv, write_csv
from .trees import RULES, BuildConfig, SplitRule, build

OUTPUT_ENV = "SPATIAL_TREES_OUTPUT_DIR"
log = logging.getLogger("spatial_trees")


class UsageError(Exception):
    pass


def _load_points(path):
    try:
        return read_csv(path)
    except FileNotFoundError:
        raise UsageError(f"dataset not found: {path}") from None
    except (ValueError, KeyError, csv.Error) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def cmd_synth(args):
    params = {"n": args.n}
    if args.generator in ("sinusoid", "affine") and args.D is not None:
        params["D"] = args.D
    if args.generator == "affine" and args.d is not None:
        params["d"] = args.d
    if args.generator == "swissroll" and args.noise is not None:
        params["noise_sigma"] = args.noise
    ps = generate(args.generator, args.seed, **params)
    out = Path(args.output or f"{args.generator}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ps, out)
    log.info("wrote %d x %d points to %s", ps.n, ps.D, out)
    return 0


def cmd_dimest(args):
    ps = _load_points(args.input)
    profiles = dimension_profiles(
        ps.points, args.epsilon, num_radii=args.num_radii,
        center_cap=None if args.center_cap == 0 else args.center_cap, seed=args.seed,
    )
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_profiles_csv(profiles, out)
    log.info("wrote %d profiles to %s", len(profiles), out)
    return 0


def cmd_build(args):
    ps = _load_points(args.input)
    conf = BuildConfig(
        SplitRule(args.rule), min_size=args.min_size, max_depth=args.max_depth,
        c=args.c, enable_distance_split=not args.no_distance_split, seed=args.seed,
    )
    tree = build(ps.points, conf)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    tree.to_jsonl(out)
    log.info("%s tree: %d nodes, height %d -> %s", args.rule, len(tree.nodes), tree.height, out)
    return 0


def cmd_run(args):
    if (args.config is None) == (args.preset is None):
        raise UsageError("give exactly one of CONFIG or --preset")
    path = cfg.preset_path(args.preset) if args.preset else Path(args.config)
    conf = cfg.load_config(path)
    if "path" in conf.dataset and not Path(conf.dataset["path"]).exists():
        raise UsageError(f"dataset not found: {conf.dataset['path']}")
    out = args.output or os.environ.get(OUTPUT_ENV) or conf.output_dir
    report = run_experiment(conf, workers=args.workers)
    write_report(report, out)
    log.info("report written to %s", out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="spatial-trees", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset as CSV")
    s.add_argument("generator", choices=sorted(GENERATORS))
    s.add_argument("--n", type=int, default=20000)
    s.add_argument("--D", type=int, default=None, help="ambient dimension (sinusoid, affine)")
    s.add_argument("--d", type=int, default=None, help="subspace dimension (affine)")
    s.add_argument("--noise", type=float, default=None, help="noise sigma (swissroll)")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_synth)

    d = sub.add_parser("dimest", help="local covariance dimension profile")
    d.add_argument("input")
    d.add_argument("--epsilon", type=float, nargs="+", default=[0.1, 0.01])
    d.add_argument("--num-radii", type=int, default=20)
    d.add_argument("--center-cap", type=int, default=2000, help="0 uses every point as a center")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("-o", "--output", default="dimest.csv")
    d.set_defaults(func=cmd_dimest)

    b = sub.add_parser("build", help="build a partition tree and write it as JSONL")
    b.add_argument("input")
    b.add_argument("--rule", choices=RULES, default="kd")
    b.add_argument("--min-size", type=int, default=10)
    b.add_argument("--max-depth", type=int, default=64)
    b.add_argument("--c", type=float, default=10.0)
    b.add_argument("--no-distance-split", action="store_true")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--output", default="tree.jsonl")
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config", nargs="?")
    r.add_argument("--preset", help=f"one of: {', '.join(cfg.preset_names())}")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("-o", "--output", help=f"output directory (overrides ${OUTPUT_ENV} and the config)")
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, SpatialTreeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line: generate scenarios, run experiment matrices, sweep, convert."""

from __future__ import annotations

import argparse
import logging
import sys

from . import reformat
from .core import DEFAULT_DELTA, MAX_ITERATIONS
from .errors import TruthDiscoveryError
from .generator import CONFLICT_MODES, COVERAGE_MODES, TRUTH_MODES, ScenarioConfig, generate_scenario
from .io import load_claims, load_scenario_config, write_claims, write_scenario
from .report import emit_figure_long
from .runner import (
    ALL_ALGORITHMS,
    STATUS_OK,
    AlgorithmSpec,
    ExperimentSpec,
    FileDataset,
    run_experiment,
    sweep_distinct,
)


def _scenario_args(p):
    p.add_argument("--config", help="key=value scenario file; flags below override it")
    p.add_argument("--n-sources", type=int)
    p.add_argument("--n-items", type=int)
    p.add_argument("--cov", choices=COVERAGE_MODES)
    p.add_argument("--conf", choices=CONFLICT_MODES)
    p.add_argument("--gt", choices=TRUTH_MODES)
    p.add_argument("--max-distinct", type=int)


def _scenario(args, seed=None) -> ScenarioConfig:
    over = {
        "n_sources": args.n_sources, "n_items": args.n_items, "cov": args.cov,
        "conf": args.conf, "gt": args.gt, "max_distinct": args.max_distinct,
        "seed": args.seed if seed is None else seed,
    }
    if args.config:
        return load_scenario_config(args.config, over)
    return ScenarioConfig(**{k: v for k, v in over.items() if v is not None})


def _parse_value(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    if "," in v:
        return tuple(_parse_value(x) for x in v.split(","))
    return v


def _algorithms(names, param_args) -> list[AlgorithmSpec]:
    """``--param ALG.key=value`` attaches overrides to one algorithm."""
    names = names or ALL_ALGORITHMS
    specs = {n: AlgorithmSpec(n) for n in names}
    for item in param_args or []:
        try:
            target, kv = item.split(".", 1)
            key, val = kv.split("=", 1)
        except ValueError:
            raise SystemExit(f"bad --param {item!r}; expected ALG.key=value") from None
        if target not in specs:
            raise SystemExit(f"--param names {target!r}, which is not among the algorithms")
        specs[target].params[key] = _parse_value(val)
    return list(specs.values())


def _summarize(rows) -> int:
    bad = [r for r in rows if r.status != STATUS_OK]
    for r in rows:
        prec = "undefined" if r.precision is None else f"{r.precision:.4f}"
        print(f"{r.dataset:40s} {r.algorithm:15s} {r.status:3s} precision={prec}")
    if bad:
        print(f"{len(bad)} of {len(rows)} cells not OK", file=sys.stderr)
        return 1
    return 0


def cmd_generate(args) -> int:
    cfg = _scenario(args)
    sc = generate_scenario(cfg)
    paths = write_scenario(sc, args.out, args.stem)
    for k, p in paths.items():
        print(f"{k}: {p}")
    return 0


def cmd_run(args) -> int:
    datasets = []
    if args.claims:
        if not args.truth:
            raise SystemExit("--claims needs --truth")
        datasets.append(FileDataset(args.claims, args.truth))
    if args.config or args.gt or args.cov or args.conf:
        datasets.extend(_scenario(args, seed=args.seed + s) for s in range(args.seeds))
    if not datasets:
        raise SystemExit("give --claims/--truth or a scenario (--config or scenario flags)")
    spec = ExperimentSpec(
        datasets, _algorithms(args.algorithms, args.param), repetitions=args.repetitions,
        output=args.out, iteration_cap=args.max_iters, delta=args.delta, seed=args.seed,
        scope=args.scope, measure_memory=args.memory, time_limit_s=args.time_limit,
        workers=args.workers,
    )
    return _summarize(run_experiment(spec))


def cmd_sweep(args) -> int:
    base = _scenario(args)
    points = sweep_distinct(
        base, _algorithms(args.algorithms, args.param),
        distinct_values=range(args.min_distinct, args.max_distinct_sweep + 1),
        seeds=range(args.seed, args.seed + args.seeds),
        iteration_cap=args.max_iters, delta=args.delta, seed=args.seed, workers=args.workers,
    )
    emit_figure_long(points, args.out)
    print(f"{len(points)} points written to {args.out}")
    return 0 if all(p is not None for _, _, p in points) else 1


def cmd_convert(args) -> int:
    claims = load_claims(args.claims)
    if args.to == "ltm":
        out = reformat.reformat_for_ltm(claims)
    else:
        out = reformat.reformat_for_mle(reformat.reformat_for_ltm(claims))
    write_claims(args.out, out)
    print(f"{len(claims)} claims in, {len(out)} claims out")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="truthdisc", description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="convergence threshold")
    p.add_argument("--max-iters", type=int, default=MAX_ITERATIONS)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic scenario to CSV files")
    _scenario_args(g)
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--stem", help="file name stem (default: scenario name)")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run algorithms and write a CSV report")
    _scenario_args(r)
    r.add_argument("--claims", help="claim CSV")
    r.add_argument("--truth", help="ground-truth CSV")
    r.add_argument("--seeds", type=int, default=1, help="number of generated scenarios")
    r.add_argument("-a", "--algorithms", nargs="+", metavar="ALG")
    r.add_argument("--param", action="append", metavar="ALG.key=value")
    r.add_argument("--repetitions", type=int, default=1)
    r.add_argument("--scope", choices=("gold", "full"), default="gold")
    r.add_argument("--memory", action="store_true", help="record peak allocations (slower)")
    r.add_argument("--time-limit", type=float, help="seconds per run before a cell is marked EL")
    r.add_argument("--workers", type=int)
    r.add_argument("--out", help="report CSV path")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="precision over the distinct-value count, long format")
    _scenario_args(s)
    s.add_argument("--seeds", type=int, default=10)
    s.add_argument("--min-distinct", type=int, default=2)
    s.add_argument("--max-distinct-sweep", type=int, default=20)
    s.add_argument("-a", "--algorithms", nargs="+", metavar="ALG")
    s.add_argument("--param", action="append", metavar="ALG.key=value")
    s.add_argument("--workers", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("convert", help="reshape claims for LTM or MLE")
    c.add_argument("claims")
    c.add_argument("--to", choices=("ltm", "mle"), required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_convert)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TruthDiscoveryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: select, simulate, verify, bench.

Exit codes: 0 success, 1 domain error or failed check, 2 bad usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, checks
from .graph import GraphError, load_graph
from .oracle import OracleGuardError
from .selection import SelectionBudget, TopHConfig
from .sim import STRATEGIES, SimError, choose_global, choose_local, load_config, run
from .uncertainty import local_uncertainty, set_uncertainty


class CliError(Exception):
    pass


def _color(text: str, code: str, stream=sys.stdout) -> str:
    if os.environ.get("NO_COLOR") or not stream.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _num(u: float):
    # JSON has no infinity; a singular map is reported as null + flag
    return u if math.isfinite(u) else None


# -- select -----------------------------------------------------------------


def cmd_select(args) -> int:
    graph, records = load_graph(args.graph)
    if not records:
        raise CliError(f"{args.graph}: no keyframes")
    in_map = {r.id for r in records if r.in_global}
    topk = TopHConfig(H=args.top_h, l_thr=args.l_thr)
    out = {"mode": args.mode, "strategy": args.strategy}
    if args.mode == "global":
        pending = sorted(set(graph.nodes) - in_map)
        budget = SelectionBudget(capacity_bits=float(args.budget), keyframe_bits=1.0)
        chosen, evals = choose_global(graph, in_map, pending, budget, topk, args.strategy, args.seed)
        u = set_uncertainty(graph, in_map | set(chosen))
        out.update(chosen=sorted(chosen), existing=sorted(in_map))
    else:
        k = graph.nodes[-1]
        if k in in_map:
            raise CliError(f"newest keyframe {k} is flagged global; nothing to build a local map for")
        cands = sorted(set(graph.nodes) - in_map - {k})
        budget = SelectionBudget(l_loc=args.budget, l_f=args.fixed_budget)
        loc, fx, u, evals = choose_local(graph, cands, k, in_map, budget, topk, args.strategy, args.seed)
        u = local_uncertainty(graph, loc, fx, k)
        out.update(newest=k, chosen=sorted(loc), fixed=sorted(fx))
    out.update(uncertainty=_num(u), singular=not math.isfinite(u), evaluations=evals)
    print(json.dumps(out))
    return 0


# -- simulate ---------------------------------------------------------------


def _suffixed(path: Path, strategy: str) -> Path:
    return path.with_name(f"{path.stem}_{strategy}{path.suffix}")


def cmd_simulate(args) -> int:
    for p in (args.stream, args.trace, args.config):
        if not Path(p).is_file():
            raise CliError(f"no such file: {p}")
    config = load_config(args.config)
    strategies = args.strategy or [config.strategy]
    out = Path(args.out)
    for s in strategies:
        report = run(dataclasses.replace(config, strategy=s), args.stream, args.trace)
        path = out if len(strategies) == 1 else _suffixed(out, s)
        report.write_csv(path, timing=args.timing)
        summary = {k: (_num(v) if isinstance(v, float) else v) for k, v in report.summary().items()}
        summary["csv"] = str(path)
        print(json.dumps(summary))
    return 0


# -- verify -----------------------------------------------------------------


def cmd_verify(args) -> int:
    failures = checks.run_all(args.instances, args.seed)
    names = sorted({f["property"] for f in failures})
    print(json.dumps({"instances": args.instances, "seed": args.seed,
                      "properties": list(checks.PROPERTIES), "failed": names, "failures": failures}))
    status = _color("FAIL", "31") if failures else _color("PASS", "32")
    print(f"verify: {status} ({len(checks.PROPERTIES) - len(names)}/{len(checks.PROPERTIES)} properties)",
          file=sys.stderr)
    return 1 if failures else 0


# -- bench ------------------------------------------------------------------


def cmd_bench(args) -> int:
    results = [bench.run_bench(args.dim, args.candidates, args.repeats, seed=args.seed + r)
               for r in range(args.rounds)]
    print(bench.format_table(results))
    if args.rounds > 1:
        cv_r = bench.coefficient_of_variation([r.reuse_median_s for r in results])
        cv_s = bench.coefficient_of_variation([r.scratch_median_s for r in results])
        print(f"cv of medians: reuse {cv_r:.3f}, scratch {cv_s:.3f}")
    speedup = float(np.median([r.speedup for r in results]))
    if args.dim >= bench.MIN_ASSERT_DIM and speedup < bench.MIN_SPEEDUP:
        print(_color(f"speedup {speedup:.2f}x below {bench.MIN_SPEEDUP}x", "31"), file=sys.stderr)
        return 1
    return 0


# -- wiring -----------------------------------------------------------------


def _positive(v: str) -> int:
    n = int(v)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _non_negative(v: str) -> int:
    n = int(v)
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adaptslam", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="select keyframes on a single graph")
    p.add_argument("--graph", required=True, help="keyframe stream (JSON lines)")
    p.add_argument("--mode", required=True, choices=("local", "global"))
    p.add_argument("--budget", required=True, type=_non_negative,
                   help="local-set size (local) or number of keyframes to uplink (global)")
    p.add_argument("--fixed-budget", type=_non_negative, default=SelectionBudget().l_f)
    p.add_argument("--strategy", choices=STRATEGIES, default="adaptslam")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-h", type=_positive, default=TopHConfig().H)
    p.add_argument("--l-thr", type=_non_negative, default=TopHConfig().l_thr)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="run the slotted device/edge simulation")
    p.add_argument("--stream", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", nargs="+", choices=STRATEGIES,
                   help="override the config strategy; several write one CSV each")
    p.add_argument("--timing", action="store_true", help="append a wall_time_s column")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the oracle property suite")
    p.add_argument("--instances", type=_positive, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time reuse vs scratch candidate scoring")
    p.add_argument("--dim", type=_positive, default=25)
    p.add_argument("--candidates", type=_positive, default=500)
    p.add_argument("--repeats", type=_positive, default=20)
    p.add_argument("--rounds", type=_positive, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "mode", None) == "local" and args.budget < 1:
        build_parser().error("--budget must be >= 1 in local mode")
    try:
        return args.func(args)
    except (CliError, GraphError, SimError, OracleGuardError, ValueError, OSError) as exc:
        print(f"adaptslam {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

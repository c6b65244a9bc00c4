"""Run every strategy over the bundled stream at several capacity fractions.

    python3 scripts/sweep_strategies.py [--fractions 0.25 0.5 0.75] [--out results/]

Writes one CSV per (fraction, strategy) and prints a table of mean global
and local uncertainty.
"""

import argparse
import dataclasses
from pathlib import Path

from adaptslam import data_path
from adaptslam.graph import read_stream
from adaptslam.sim import SimConfig, load_config, simulate
from adaptslam.synth import make_trace

STRATEGIES = ("adaptslam", "orbbuf", "random", "dropoldest")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0], help="seeds for the Random baseline")
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    records = read_stream(data_path("stream60.jsonl"))
    base = load_config(data_path("config.json"))
    print(f"{'fraction':>8} {'strategy':>11} {'seed':>4} {'mean_global':>12} {'mean_local':>11}")
    for frac in args.fractions:
        trace = make_trace(fraction=frac)
        for s in STRATEGIES:
            for seed in args.seeds if s == "random" else [0]:
                cfg: SimConfig = dataclasses.replace(base, strategy=s, seed=seed)
                rep = simulate(cfg, records, trace)
                rep.write_csv(args.out / f"f{frac:g}_{s}_s{seed}.csv")
                m = rep.summary()
                print(f"{frac:>8g} {s:>11} {seed:>4} {m['mean_global_uncertainty']:>12.2f} "
                      f"{m['mean_local_uncertainty']:>11.2f}")


if __name__ == "__main__":
    main()

"""Plot global uncertainty per slot from one or more simulate CSVs.

    python3 scripts/plot_report.py results/r_*.csv -o uncertainty.png

Needs matplotlib (not a package dependency).
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    slots = [int(r["slot"]) for r in rows]
    glob = [float(r["global_uncertainty"]) if r["global_uncertainty"] else float("nan") for r in rows]
    return slots, glob


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("reports", nargs="+", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("uncertainty.png"))
    args = ap.parse_args(argv)
    fig, ax = plt.subplots(figsize=(7, 4))
    for p in args.reports:
        slots, glob = read(p)
        ax.plot(slots, glob, label=p.stem)
    ax.set_xlabel("slot")
    ax.set_ylabel("global map uncertainty (-log det)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()

"""Regenerate the bundled fixtures under src/adaptslam/data/.

    python3 scripts/make_fixtures.py [--out DIR]
"""

import argparse
import json
from pathlib import Path

import numpy as np

from adaptslam.graph import KeyframeRecord
from adaptslam.sim import SimConfig, write_trace
from adaptslam.synth import make_stream, make_trace, write_stream

DATA = Path(__file__).resolve().parents[1] / "src" / "adaptslam" / "data"


def small_graph(seed: int = 3, n: int = 8, n_global: int = 3) -> list[KeyframeRecord]:
    """Dense 8-node graph; the first ``n_global`` keyframes are flagged as already uplinked."""
    rng = np.random.default_rng(seed)
    recs = []
    for i in range(n):
        covis = tuple((j, int(rng.integers(1, 60))) for j in range(i) if rng.random() < 0.6)
        recs.append(KeyframeRecord(i, float(i) * 0.5, i > 0, covis, in_global=i < n_global))
    return recs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DATA)
    args = ap.parse_args(argv)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    write_stream(make_stream(), out / "stream60.jsonl")
    write_trace(make_trace(), out / "trace60.csv")
    (out / "config.json").write_text(json.dumps(SimConfig().to_dict(), indent=2) + "\n")
    write_stream(small_graph(), out / "fixture8.jsonl")
    tri = [
        KeyframeRecord(0, 0.0),
        KeyframeRecord(1, 0.5, False, ((0, 1),)),
        KeyframeRecord(2, 1.0, False, ((0, 1), (1, 1))),
    ]
    write_stream(tri, out / "tri.jsonl")
    print(f"fixtures written to {out}")


if __name__ == "__main__":
    main()

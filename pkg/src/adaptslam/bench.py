"""Timing of candidate scoring: batched reuse path vs per-candidate factorization."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from .graph import build_laplacian
from .reuse import CandidateDelta, bordered_matrix, init_reuse_state, score_candidates
from .checks import random_connected_graph
from .uncertainty import uncertainty_of

MIN_ASSERT_DIM = 8
MIN_SPEEDUP = 3.0


@dataclass
class BenchResult:
    dim: int
    candidates: int
    repeats: int
    reuse_median_s: float
    scratch_median_s: float
    max_abs_diff: float

    @property
    def speedup(self) -> float:
        return self.scratch_median_s / self.reuse_median_s


def pose_graph_candidates(rng: np.random.Generator, dim: int, count: int, max_links: int = 4):
    """Candidate keyframes linked to at most ``max_links`` existing ones, as in
    a covisibility graph where each frame sees only its neighbourhood."""
    a = np.zeros((count, dim))
    for c in range(count):
        k = int(rng.integers(1, min(max_links, dim) + 1))
        a[c, rng.choice(dim, size=k, replace=False)] = rng.uniform(1.0, 500.0, k)
    d = a.sum(axis=1) + rng.uniform(1.0, 500.0, count)
    return a, d


def run_bench(dim: int, candidates: int, repeats: int, seed: int = 0) -> BenchResult:
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, dim + 1)
    A = build_laplacian(g, g.nodes)[1:, 1:]
    a, d = pose_graph_candidates(rng, dim, candidates)

    reuse_t, scratch_t = [], []
    diff = 0.0
    for _ in range(repeats):
        t0 = time.perf_counter()
        fast = score_candidates(init_reuse_state(A), a, d)
        reuse_t.append(time.perf_counter() - t0)

        t0 = time.perf_counter()
        slow = np.array([uncertainty_of(bordered_matrix(A, CandidateDelta(a[i], d[i]))) for i in range(candidates)])
        scratch_t.append(time.perf_counter() - t0)
        diff = max(diff, float(np.max(np.abs(fast - slow))))
    return BenchResult(dim, candidates, repeats, statistics.median(reuse_t), statistics.median(scratch_t), diff)


def format_table(results: list[BenchResult]) -> str:
    head = f"{'dim':>5} {'cands':>6} {'reuse_ms':>10} {'scratch_ms':>11} {'speedup':>8} {'max_diff':>10}"
    rows = [
        f"{r.dim:>5} {r.candidates:>6} {r.reuse_median_s * 1e3:>10.3f} {r.scratch_median_s * 1e3:>11.3f} "
        f"{r.speedup:>8.2f} {r.max_abs_diff:>10.2e}"
        for r in results
    ]
    return "\n".join([head] + rows)


def coefficient_of_variation(values: list[float]) -> float:
    return statistics.pstdev(values) / statistics.mean(values)

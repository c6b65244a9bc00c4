"""Reference keyframe selection strategies: Random, DropOldest, ORBBuf.

Random uses the standard-library ``random.Random`` (MT19937) and its
``sample`` routine over the id-sorted candidates, so a seed reproduces the
same choice on every platform.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Iterable

from .graph import PoseGraph


class BaselineKind(enum.Enum):
    RANDOM = "random"
    DROP_OLDEST = "dropoldest"
    ORBBUF = "orbbuf"


@dataclass(frozen=True)
class Baseline:
    kind: BaselineKind
    seed: int = 0


def _check(candidates: list[int], s: int) -> None:
    if s < 0 or s > len(candidates):
        raise ValueError(f"cannot pick {s} of {len(candidates)} candidates")


def random_select(candidates: Iterable[int], s: int, seed: int) -> tuple[int, ...]:
    cands = sorted(set(candidates))
    _check(cands, s)
    return tuple(sorted(random.Random(seed).sample(cands, s)))


def drop_oldest(candidates: Iterable[int], s: int) -> tuple[int, ...]:
    """Keep the ``s`` newest (highest-id) candidates."""
    cands = sorted(set(candidates))
    _check(cands, s)
    return tuple(cands[len(cands) - s :])


def orbbuf_select(graph: PoseGraph, candidates: Iterable[int], s: int) -> tuple[int, ...]:
    """Size-``s`` subset maximizing the weakest link between id-consecutive picks.

    Binary search over the distinct pair weights; feasibility of a threshold
    is a longest-chain pass over the id-ordered candidates. Among optimal
    subsets the lexicographically smallest id sequence is returned.
    """
    cands = sorted(set(candidates))
    _check(cands, s)
    if s <= 1 or s == len(cands):
        return tuple(cands[:s])
    n = len(cands)
    W = [[graph.neighbors(u).get(v, 0.0) for v in cands] for u in cands]
    levels = sorted({W[i][j] for i in range(n) for j in range(i + 1, n)} | {0.0})

    lo, hi = 0, len(levels) - 1  # levels[0] == 0 is always feasible
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if max(_chain_lengths(W, levels[mid])) >= s:
            lo = mid
        else:
            hi = mid - 1
    t = levels[lo]

    longest = _chain_lengths(W, t)
    picked: list[int] = []
    prev = None
    for i in range(n):
        need = s - len(picked)
        if need == 0:
            break
        if longest[i] >= need and (prev is None or W[prev][i] >= t):
            picked.append(i)
            prev = i
    return tuple(cands[i] for i in picked)


def _chain_lengths(W: list[list[float]], t: float) -> list[int]:
    """``out[i]`` = longest id-increasing chain starting at ``i`` with links >= t."""
    n = len(W)
    out = [1] * n
    for i in range(n - 2, -1, -1):
        row = W[i]
        best = 1
        for j in range(i + 1, n):
            if row[j] >= t and out[j] + 1 > best:
                best = out[j] + 1
        out[i] = best
    return out


def baseline_select(graph: PoseGraph, candidates: Iterable[int], s: int, baseline: Baseline) -> tuple[int, ...]:
    if baseline.kind is BaselineKind.RANDOM:
        return random_select(candidates, s, baseline.seed)
    if baseline.kind is BaselineKind.DROP_OLDEST:
        return drop_oldest(candidates, s)
    return orbbuf_select(graph, candidates, s)

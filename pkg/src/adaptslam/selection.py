"""Keyframe selection: plain greedy, top-h beam greedy, and the local/global map builders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .graph import GraphError, PoseGraph, build_laplacian, weight_matrix
from .reuse import (
    CandidateDelta,
    ReuseError,
    ReuseState,
    bordered_matrix,
    extend_state,
    init_reuse_state,
    score_candidates,
)
from .uncertainty import (
    fixed_weights,
    local_laplacian,
    local_uncertainty,
    log_det,
    set_uncertainty,
    uncertainty_of,
)

DEFAULT_KEYFRAME_BITS = 3.2e5


@dataclass(frozen=True)
class SelectionBudget:
    l_loc: int = 10
    l_f: int = 9
    capacity_bits: float = 0.0
    keyframe_bits: float = DEFAULT_KEYFRAME_BITS

    def __post_init__(self):
        if self.l_loc < 1:
            raise ValueError("l_loc must be >= 1")
        if self.l_f < 0:
            raise ValueError("l_f must be >= 0")
        if self.capacity_bits < 0:
            raise ValueError("capacity_bits must be >= 0")
        if not self.keyframe_bits > 0:
            raise ValueError("keyframe_bits must be > 0")

    @property
    def max_uplink(self) -> int:
        return int(math.floor(self.capacity_bits / self.keyframe_bits))


@dataclass(frozen=True)
class TopHConfig:
    H: int = 5
    l_thr: int = 30

    def __post_init__(self):
        if self.H < 1:
            raise ValueError("H must be >= 1")
        if self.l_thr < 0:
            raise ValueError("l_thr must be >= 0")


@dataclass
class SelectionResult:
    chosen: tuple[int, ...]
    uncertainty: float
    evaluations: int = 0
    singular: bool = False
    # best-uncertainty of the beam after each step (top-h runs only)
    trace: list[float] = field(default_factory=list, repr=False)


def _rank(u: float, ids) -> tuple:
    # 1e-9 rounding turns float noise into ties so that lowest ids win
    return (round(u, 9) if math.isfinite(u) else math.inf, tuple(sorted(ids)))


def greedy_max(
    objective: Callable[[frozenset], float],
    universe: Iterable[int],
    s: int,
    stop_when_flat: bool = False,
) -> tuple[frozenset, float, int]:
    """Greedy cardinality-constrained maximization.

    Returns ``(S, f(S), evaluations)``. Ties go to the lowest id. With
    ``stop_when_flat`` the loop ends early once every marginal gain is zero.
    """
    universe = sorted(set(universe))
    if s < 0:
        raise ValueError("s must be non-negative")
    if s > len(universe):
        raise ValueError(f"cannot pick {s} elements from {len(universe)}")
    chosen: frozenset = frozenset()
    current = objective(chosen)
    evals = 1
    while len(chosen) < s:
        best_x, best_v = None, -math.inf
        for x in universe:
            if x in chosen:
                continue
            v = objective(chosen | {x})
            evals += 1
            if best_x is None or _beats(v, best_v):
                best_x, best_v = x, v
        if stop_when_flat and best_v == current:
            break
        chosen = chosen | {best_x}
        current = best_v
    return chosen, current, evals


def _beats(v: float, best: float) -> bool:
    if math.isinf(v) or math.isinf(best):
        return v > best
    return v > best + 1e-12 * max(1.0, abs(best))


# -- top-h beam -------------------------------------------------------------


@dataclass
class _Entry:
    chosen: tuple[int, ...]
    anchor: int | None
    rows: tuple[int, ...]  # node per row of the reduced matrix
    state: ReuseState | None  # None when the reduced matrix is singular
    score: float


def _reduced(graph: PoseGraph, anchor: int, rows: tuple[int, ...]) -> np.ndarray:
    L = build_laplacian(graph, (anchor,) + rows)
    return L[1:, 1:]


def _make_entry(graph, chosen, anchor, rows, score) -> _Entry:
    try:
        state = init_reuse_state(_reduced(graph, anchor, rows))
    except ReuseError:
        state = None
    return _Entry(chosen, anchor, rows, state, score)


def _expand(graph: PoseGraph, entry: _Entry, candidates: list[int]):
    """Score every candidate appended to ``entry``.

    Returns ``(uncertainties, a, d)``; singular extensions score ``+inf``.
    """
    W = weight_matrix(graph, (entry.anchor,) + entry.rows + tuple(candidates))
    m = len(entry.rows)
    a = W[1 : m + 1, m + 1 :].T
    d = W[0, m + 1 :] + a.sum(axis=1)
    if entry.state is not None:
        return score_candidates(entry.state, a, d), a, d
    A = _reduced(graph, entry.anchor, entry.rows)
    scores = np.array(
        [uncertainty_of(bordered_matrix(A, CandidateDelta(a[i], d[i]))) for i in range(len(d))]
    )
    return scores, a, d


def top_h_select(
    graph: PoseGraph,
    seed: Iterable[int],
    candidates: Iterable[int],
    size: int,
    cfg: TopHConfig,
    anchor: int | None = None,
) -> tuple[tuple[int, ...], int, list[float]]:
    """Beam search adding ``size`` candidates to ``seed``.

    ``anchor`` defaults to the lowest seed id. With an empty seed and no
    anchor, the first step admits every singleton (they all tie at zero) and
    the beam is truncated from the second step on.

    Returns ``(chosen, evaluations, best_score_per_step)``.
    """
    seed = sorted(set(seed))
    candidates = sorted(set(candidates) - set(seed) - ({anchor} if anchor is not None else set()))
    if anchor is None and seed:
        anchor = seed[0]
    rows0 = tuple(n for n in seed if n != anchor)
    evals = 0
    trace: list[float] = []

    if anchor is None:
        beam = [_make_entry(graph, (n,), n, (), 0.0) for n in candidates]
        evals += len(candidates)
        trace.append(0.0)
    else:
        beam = [_make_entry(graph, (), anchor, rows0, math.nan)]

    while beam and len(beam[0].chosen) < size:
        h = cfg.H if len(beam[0].chosen) <= cfg.l_thr else 1
        pool = []
        for bi, entry in enumerate(beam):
            free = [n for n in candidates if n not in entry.chosen]
            if not free:
                continue
            scores, a, d = _expand(graph, entry, free)
            evals += len(free)
            for ci, n in enumerate(free):
                pool.append((_rank(scores[ci], entry.chosen + (n,)), bi, ci, n, a[ci], d[ci], scores[ci]))
        if not pool:
            break
        pool.sort(key=lambda t: (t[0], t[1], t[2]))
        seen = set()
        nxt = []
        for key, bi, ci, n, a_row, d_val, score in pool:
            if key[1] in seen:
                continue
            seen.add(key[1])
            parent = beam[bi]
            chosen = parent.chosen + (n,)
            rows = parent.rows + (n,)
            state = None
            if parent.state is not None and math.isfinite(score):
                try:
                    state = extend_state(parent.state, CandidateDelta(a_row, d_val))
                except (ReuseError, ArithmeticError):
                    state = None
            if state is None and math.isfinite(score):
                nxt.append(_make_entry(graph, chosen, parent.anchor, rows, score))
            else:
                nxt.append(_Entry(chosen, parent.anchor, rows, state, score))
            if len(nxt) >= h:
                break
        beam = nxt
        trace.append(beam[0].score)

    best = min(beam, key=lambda e: _rank(e.score, e.chosen)) if beam else None
    return (best.chosen if best else ()), evals, trace


def select_local_keyframes(
    graph: PoseGraph,
    candidates: Iterable[int],
    k: int,
    l_loc: int,
    cfg: TopHConfig = TopHConfig(),
) -> SelectionResult:
    """Local keyframe set for the newest keyframe ``k`` (fixed set empty)."""
    candidates = sorted(set(candidates))
    if k in candidates:
        raise GraphError(f"keyframe {k} cannot be its own local candidate")
    if len(candidates) <= l_loc:
        chosen, evals, trace = tuple(candidates), 0, []
    else:
        chosen, evals, trace = top_h_select(graph, (), candidates, l_loc, cfg, anchor=k)
    u = local_uncertainty(graph, chosen, (), k)
    return SelectionResult(tuple(chosen), u, evals, math.isinf(u), trace)


def select_fixed_keyframes(
    graph: PoseGraph,
    k_loc_star: Iterable[int],
    k: int,
    k_g_user: Iterable[int],
    l_f: int,
) -> SelectionResult:
    """Greedy fixed-keyframe selection; each pick only raises local diagonals."""
    k_loc_star = set(k_loc_star)
    pool = sorted(set(k_g_user))
    if set(pool) & (k_loc_star | {k}):
        raise GraphError("fixed candidates overlap the local set")
    L, order = local_laplacian(graph, k_loc_star, (), k)
    M0 = L[1:, 1:]
    cols = {n: fixed_weights(graph, order, [n])[1:] for n in pool}

    def objective(S: frozenset) -> float:
        if not S:
            return log_det(M0)
        return log_det(M0 + np.diag(sum(cols[n] for n in S)))

    s = min(l_f, len(pool))
    chosen, _, evals = greedy_max(objective, pool, s, stop_when_flat=True)
    u = local_uncertainty(graph, k_loc_star, chosen, k)
    return SelectionResult(tuple(sorted(chosen)), u, evals, math.isinf(u))


def construct_local_map(
    graph: PoseGraph,
    candidates: Iterable[int],
    k: int,
    k_g_user: Iterable[int],
    budget: SelectionBudget,
    cfg: TopHConfig = TopHConfig(),
) -> tuple[SelectionResult, SelectionResult]:
    """Local set first, then fixed set on top of it.

    The second result's ``uncertainty`` is the joint local-map uncertainty
    of the pair.
    """
    loc = select_local_keyframes(graph, candidates, k, budget.l_loc, cfg)
    fixed = select_fixed_keyframes(graph, loc.chosen, k, k_g_user, budget.l_f)
    return loc, fixed


def select_global_keyframes(
    graph: PoseGraph,
    k_g_edge: Iterable[int],
    pending: Iterable[int],
    budget: SelectionBudget,
    cfg: TopHConfig = TopHConfig(),
) -> SelectionResult:
    """Pick at most ``floor(D/d)`` pending keyframes to uplink."""
    k_g_edge = set(k_g_edge)
    pending = sorted(set(pending) - k_g_edge)
    s = budget.max_uplink
    if s <= 0 or not pending:
        chosen, evals, trace = (), 0, []
    elif s >= len(pending):
        chosen, evals, trace = tuple(pending), 0, []
    else:
        chosen, evals, trace = top_h_select(graph, k_g_edge, pending, s, cfg)
    u = set_uncertainty(graph, k_g_edge | set(chosen))
    return SelectionResult(tuple(chosen), u, evals, math.isinf(u), trace)


def with_capacity(budget: SelectionBudget, capacity_bits: float) -> SelectionBudget:
    return replace(budget, capacity_bits=float(capacity_bits))

"""Exhaustive ground truth: brute-force selection, spanning-tree enumeration,
the empirical submodularity ratio, and the closed-form ratio lower bound.

Every enumeration has a hard size guard; oracles are exact or refuse.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .graph import PoseGraph, weight_matrix
from .selection import SelectionResult, _rank
from .uncertainty import local_uncertainty, set_uncertainty

MAX_COMBINATIONS = 10**7
MAX_TREE_NODES = 8
MAX_RATIO_UNIVERSE = 10
# marginal gains below this are treated as exactly zero (0/0 := 1)
GAIN_ATOL = 1e-12


class OracleGuardError(ValueError):
    """The requested enumeration exceeds its hard size limit."""


def brute_force_select(
    graph: PoseGraph,
    candidates: Iterable[int],
    existing: Iterable[int],
    s: int,
    mode: str = "global",
    k: int | None = None,
    k_fixed: Iterable[int] = (),
) -> SelectionResult:
    """Exact minimum-uncertainty size-``s`` subset of ``candidates``.

    ``mode="local"`` scores ``local_uncertainty(S, k_fixed, k)``;
    ``mode="global"`` scores the global map ``existing | S``.
    """
    cands = sorted(set(candidates))
    existing = set(existing)
    k_fixed = tuple(k_fixed)
    s = min(s, len(cands))
    total = math.comb(len(cands), s)
    if total > MAX_COMBINATIONS:
        raise OracleGuardError(
            f"brute force refused: C({len(cands)}, {s}) = {total} exceeds {MAX_COMBINATIONS}"
        )
    if mode == "local":
        if k is None:
            raise ValueError("local mode needs the newest keyframe k")
        score = lambda S: local_uncertainty(graph, S, k_fixed, k)
    elif mode == "global":
        score = lambda S: set_uncertainty(graph, existing | set(S))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    best, best_key, best_u = (), None, math.inf
    for S in itertools.combinations(cands, s):
        u = score(S)
        key = _rank(u, S)
        if best_key is None or key < best_key:
            best, best_key, best_u = S, key, u
    return SelectionResult(tuple(best), best_u, total, math.isinf(best_u))


def brute_force_local_map(
    graph: PoseGraph,
    candidates: Iterable[int],
    k: int,
    k_g_user: Iterable[int],
    l_loc: int,
    l_f: int,
) -> tuple[tuple[int, ...], tuple[int, ...], float]:
    """Joint optimum over (local set, fixed set) without decomposition."""
    cands = sorted(set(candidates))
    fixed_pool = sorted(set(k_g_user))
    s_loc, s_f = min(l_loc, len(cands)), min(l_f, len(fixed_pool))
    total = math.comb(len(cands), s_loc) * math.comb(len(fixed_pool), s_f)
    if total > MAX_COMBINATIONS:
        raise OracleGuardError(f"joint brute force refused: {total} combinations")
    best = ((), (), math.inf)
    best_key = None
    for loc in itertools.combinations(cands, s_loc):
        for fx in itertools.combinations(fixed_pool, s_f):
            u = local_uncertainty(graph, loc, fx, k)
            key = (_rank(u, ()), loc, fx)
            if best_key is None or key < best_key:
                best, best_key = (loc, fx, u), key
    return best


@lru_cache(maxsize=None)
def labeled_trees(n: int) -> np.ndarray:
    """Every labeled tree on ``n`` nodes as an ``(n**(n-2), n-1, 2)`` edge array."""
    if n < 2:
        return np.zeros((1, 0, 2), dtype=np.int64)
    if n == 2:
        return np.array([[[0, 1]]], dtype=np.int64)
    seqs = np.array(list(itertools.product(range(n), repeat=n - 2)), dtype=np.int64)
    N = seqs.shape[0]
    deg = np.ones((N, n), dtype=np.int64)
    np.add.at(deg, (np.repeat(np.arange(N), n - 2), seqs.ravel()), 1)
    edges = np.empty((N, n - 1, 2), dtype=np.int64)
    rows = np.arange(N)
    labels = np.arange(n)
    for i in range(n - 2):
        leaf = np.where(deg == 1, labels, n).argmin(axis=1)
        edges[:, i, 0] = leaf
        edges[:, i, 1] = seqs[:, i]
        deg[rows, leaf] -= 1
        deg[rows, seqs[:, i]] -= 1
    last = np.where(deg == 1)
    pair = last[1].reshape(N, 2)
    edges[:, n - 2] = pair
    edges.setflags(write=False)
    return edges


def spanning_tree_weight(graph: PoseGraph, nodes: Iterable[int] | None = None) -> float:
    """Sum over spanning trees of the product of (merged) edge weights."""
    order = sorted(graph.nodes if nodes is None else set(nodes))
    n = len(order)
    if n > MAX_TREE_NODES:
        raise OracleGuardError(f"spanning-tree enumeration limited to {MAX_TREE_NODES} nodes, got {n}")
    if n <= 1:
        return 1.0
    W = weight_matrix(graph, order)
    trees = labeled_trees(n)
    return float(np.prod(W[trees[:, :, 0], trees[:, :, 1]], axis=1).sum())


def submodularity_ratio(
    objective: Callable[[frozenset], float], universe: Iterable[int], s: int
) -> float:
    """Exact minimum of marginal-gain ratios over all ``L``, ``|S| <= s``, ``x``.

    Uses the convention ``0/0 = 1``.
    """
    items = sorted(set(universe))
    n = len(items)
    if n > MAX_RATIO_UNIVERSE:
        raise OracleGuardError(f"submodularity ratio limited to {MAX_RATIO_UNIVERSE} elements, got {n}")
    full = 1 << n
    f = np.array(
        [objective(frozenset(items[i] for i in range(n) if mask >> i & 1)) for mask in range(full)]
    )
    if not np.all(np.isfinite(f)):
        raise ValueError("objective must be finite on every subset")
    masks = np.arange(full)
    popcount = np.array([bin(m).count("1") for m in range(full)])
    S_masks = masks[popcount <= s]
    best = math.inf
    for x in range(n):
        bit = 1 << x
        L = masks[(masks & bit) == 0][:, None]
        S = S_masks[(S_masks & bit) == 0][None, :]
        num = np.broadcast_to(f[L | bit] - f[L], (L.shape[0], S.shape[1]))
        LS = L | S
        den = f[LS | bit] - f[LS]
        num = np.where(np.abs(num) <= GAIN_ATOL, 0.0, num)
        den = np.where(np.abs(den) <= GAIN_ATOL, 0.0, den)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(den != 0, num / np.where(den != 0, den, 1.0), np.sign(num) * math.inf)
        r = np.where((num == 0) & (den == 0), 1.0, r)
        best = min(best, float(r.min()))
    return best


def lemma4_bound(graph: PoseGraph, k_base: Iterable[int], k_add: Iterable[int]) -> float | None:
    """Closed-form lower bound on the submodularity ratio when adding ``k_add``
    to a large base set. Returns ``None`` when the bound is vacuous (hypothesis
    ``w_max / (|base| w_min) < 1`` fails, the log argument is not positive, or
    every base-to-add weight is 1).
    """
    base, add = sorted(set(k_base)), sorted(set(k_add))
    if not base or not add or set(base) & set(add):
        return None
    nodes = base + add
    W = weight_matrix(graph, nodes)
    off = ~np.eye(len(nodes), dtype=bool)
    w_max, w_min = float(W[off].max()), float(W[off].min())
    nb = len(base)
    if w_min <= 0 or not w_max / (nb * w_min) < 1:
        return None
    arg = 1.0 - 4.0 * len(add) ** 2 * w_max**2 / (nb * w_min - w_max)
    if arg <= 0:
        return None
    vartheta = float(np.log(W[:nb, nb:]).sum(axis=0).min())
    if vartheta <= 0:
        return None
    return 1.0 + math.log(arg) / vartheta

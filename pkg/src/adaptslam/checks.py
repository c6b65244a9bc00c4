"""Random instance generators and the oracle property suite behind ``verify``.

Each property takes a numpy ``Generator`` and an instance count and returns a
list of failure dicts (empty when every instance passes).
"""

from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from .graph import EdgeCategory, PoseGraph, build_laplacian
from .oracle import brute_force_select, lemma4_bound, spanning_tree_weight, submodularity_ratio
from .reuse import CandidateDelta, candidate_uncertainty, init_reuse_state, scratch_uncertainty
from .selection import (
    SelectionBudget,
    TopHConfig,
    greedy_max,
    select_global_keyframes,
)
from .uncertainty import fixed_weights, local_laplacian, local_uncertainty, log_det

MATRIX_TREE_RTOL = 1e-9
REUSE_RTOL = 1e-7
LOG_TOL = 1e-9  # slack for "never beats" comparisons in the log domain


# -- generators -------------------------------------------------------------


def random_connected_graph(
    rng: np.random.Generator,
    n: int,
    w_lo: float = 1.0,
    w_hi: float = 500.0,
    p_extra: float = 0.4,
    p_imu: float = 0.3,
) -> PoseGraph:
    """Connected multigraph on ids ``0..n-1``: random tree plus extra edges,
    with occasional IMU edges stacked on consecutive pairs."""
    edges = []
    have = set()
    perm = rng.permutation(n)
    for i in range(1, n):
        j = int(rng.integers(i))
        pair = (min(perm[i], perm[j]), max(perm[i], perm[j]))
        have.add(pair)
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in have and rng.random() < p_extra:
                have.add((a, b))
    for a, b in sorted(have):
        edges.append((int(a), int(b), EdgeCategory.COVIS, float(rng.uniform(w_lo, w_hi))))
    for a in range(n - 1):
        if rng.random() < p_imu:
            edges.append((a, a + 1, EdgeCategory.IMU, float(rng.uniform(w_lo, w_hi))))
    return PoseGraph.from_edges(range(n), edges)


def complete_graph(rng: np.random.Generator, n: int, w_lo: float, w_hi: float) -> PoseGraph:
    edges = [
        (a, b, float(rng.uniform(w_lo, w_hi))) for a in range(n) for b in range(a + 1, n)
    ]
    return PoseGraph.from_edges(range(n), edges)


def random_extension(rng: np.random.Generator, dim: int, w_hi: float = 500.0, density: float = 0.5):
    """``(A, a, d)``: ``A`` a reduced Laplacian of a connected graph on
    ``dim + 1`` nodes, ``(a, d)`` a new node attached to it."""
    g = random_connected_graph(rng, dim + 1, w_hi=w_hi)
    A = build_laplacian(g, g.nodes)[1:, 1:]
    a = np.where(rng.random(dim) < density, rng.uniform(1.0, w_hi, dim), 0.0)
    to_anchor = float(rng.uniform(1.0, w_hi)) if rng.random() < 0.7 or not a.any() else 0.0
    return A, a, to_anchor + float(a.sum())


# -- properties -------------------------------------------------------------


def check_matrix_tree(rng, instances: int) -> list[dict]:
    out = []
    for i in range(instances):
        n = int(rng.integers(3, 9))
        g = random_connected_graph(rng, n)
        L = build_laplacian(g, g.nodes)
        det = math.exp(log_det(L[1:, 1:]))
        trees = spanning_tree_weight(g)
        rel = abs(det - trees) / abs(trees)
        if not rel <= MATRIX_TREE_RTOL:
            out.append({"property": "matrix_tree", "instance": i, "nodes": n, "rel_error": rel})
    return out


def check_reuse_exact(rng, instances: int) -> list[dict]:
    out = []
    for i in range(instances):
        dim = int(rng.integers(1, 31))
        A, a, d = random_extension(rng, dim, density=float(rng.uniform(0.1, 1.0)))
        delta = CandidateDelta(a, d)
        fast = candidate_uncertainty(init_reuse_state(A), delta)
        ref = scratch_uncertainty(A, delta)
        if math.isinf(fast) and math.isinf(ref):
            continue
        err = abs(fast - ref)
        if not err <= REUSE_RTOL * max(abs(ref), 1.0):
            out.append({"property": "reuse_exact", "instance": i, "dim": dim, "abs_error": err})
    return out


def greedy_instance(rng):
    """Global-selection instance: existing map, pending candidates, budget."""
    n_exist = int(rng.integers(1, 4))
    n_cand = int(rng.integers(2, 11))
    g = random_connected_graph(rng, n_exist + n_cand, w_hi=50.0, p_extra=0.35)
    existing = list(range(n_exist))
    pending = list(range(n_exist, n_exist + n_cand))
    s = int(rng.integers(1, min(4, n_cand - 1) + 1)) if n_cand > 1 else 1
    return g, existing, pending, s


def greedy_vs_bruteforce(g, existing, pending, s, cfg: TopHConfig = TopHConfig(H=5)) -> tuple[float, float]:
    budget = SelectionBudget(capacity_bits=s * 1.0, keyframe_bits=1.0)
    ours = select_global_keyframes(g, existing, pending, budget, cfg).uncertainty
    best = brute_force_select(g, pending, existing, s, mode="global").uncertainty
    return ours, best


def check_greedy_never_beats(rng, instances: int) -> list[dict]:
    out = []
    for i in range(instances):
        ours, best = greedy_vs_bruteforce(*greedy_instance(rng))
        if ours < best - LOG_TOL * max(1.0, abs(best)):
            out.append({"property": "greedy_vs_bruteforce", "instance": i, "greedy": ours, "optimum": best})
    return out


def fixed_instance(rng):
    """Local map with a connected local set and up to 8 fixed candidates."""
    n_loc = int(rng.integers(1, 5))
    n_fix = int(rng.integers(1, 9))
    n = n_loc + n_fix + 1
    g = random_connected_graph(rng, n, w_hi=100.0, p_extra=0.5)
    k = n - 1
    loc = list(range(n_fix, n_fix + n_loc))
    fixed_pool = list(range(n_fix))
    s = int(rng.integers(1, n_fix + 1))
    return g, loc, k, fixed_pool, s


def fixed_gain_objective(g, loc, k, fixed_pool) -> Callable[[frozenset], float]:
    """Log-det gain of adding fixed keyframes; zero on the empty set."""
    L, order = local_laplacian(g, loc, (), k)
    M0 = L[1:, 1:]
    base = log_det(M0)
    cols = {n: fixed_weights(g, order, [n])[1:] for n in fixed_pool}

    def f(S: frozenset) -> float:
        if not S:
            return 0.0
        return log_det(M0 + np.diag(sum(cols[n] for n in S))) - base

    return f


def check_fixed_greedy_bound(rng, instances: int) -> list[dict]:
    """Greedy fixed-keyframe value is within ``1 - 1/e`` of the exhaustive optimum."""
    out = []
    for i in range(instances):
        g, loc, k, pool, s = fixed_instance(rng)
        f = fixed_gain_objective(g, loc, k, pool)
        if not math.isfinite(local_uncertainty(g, loc, (), k)):
            continue
        _, v_greedy, _ = greedy_max(f, pool, s)
        v_opt = max(f(frozenset(S)) for S in itertools.combinations(pool, s))
        if v_greedy < (1 - 1 / math.e) * v_opt - LOG_TOL * max(1.0, v_opt):
            out.append({"property": "fixed_greedy_bound", "instance": i, "greedy": v_greedy, "optimum": v_opt})
    return out


def ratio_bound_instance(rng, n_base: int | None = None, n_add: int | None = None, w_hi: float = 1.1):
    """Complete graph on base + add + newest keyframe, weights in ``[1, w_hi]``."""
    n_add = int(rng.integers(2, 4)) if n_add is None else n_add
    n_base = int(rng.integers(60, 90)) if n_base is None else n_base
    n = n_base + n_add + 1
    g = complete_graph(rng, n, 1.0, w_hi)
    base = list(range(n_base))
    add = list(range(n_base, n_base + n_add))
    return g, base, add, n - 1


def base_extension_objective(g, base, k) -> Callable[[frozenset], float]:
    return lambda S: -local_uncertainty(g, set(base) | set(S), (), k)


def check_ratio_bound(rng, instances: int) -> list[dict]:
    out = []
    checked = 0
    attempts = 0
    while checked < instances and attempts < 20 * instances:
        attempts += 1
        g, base, add, k = ratio_bound_instance(rng)
        bound = lemma4_bound(g, base, add)
        if bound is None:
            continue
        checked += 1
        ratio = submodularity_ratio(base_extension_objective(g, base, k), add, len(add))
        if ratio < bound - LOG_TOL:
            out.append({"property": "ratio_bound", "instance": checked - 1, "ratio": ratio, "bound": bound})
    if checked < instances:
        out.append({"property": "ratio_bound", "error": f"only {checked} instances met the hypothesis"})
    return out


PROPERTIES: dict[str, Callable[[np.random.Generator, int], list[dict]]] = {
    "matrix_tree": check_matrix_tree,
    "reuse_exact": check_reuse_exact,
    "greedy_vs_bruteforce": check_greedy_never_beats,
    "fixed_greedy_bound": check_fixed_greedy_bound,
    "ratio_bound": check_ratio_bound,
}


def run_all(instances: int, seed: int = 0) -> list[dict]:
    failures = []
    for i, (name, prop) in enumerate(PROPERTIES.items()):
        rng = np.random.default_rng([seed, i])
        failures.extend(prop(rng, instances))
    return failures

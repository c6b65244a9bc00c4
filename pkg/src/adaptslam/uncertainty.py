"""D-optimality uncertainty of global and local pose graphs.

Uncertainty is ``-log det`` of the anchored (reduced) Laplacian. The constant
per-measurement information block is dropped: it only shifts the value by a
constant and never changes which keyframe set is best.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .graph import GraphError, PoseGraph, build_laplacian, weight_matrix

# pivot <= PIVOT_RTOL * max(diag) is treated as singular
PIVOT_RTOL = 1e-10
SYMMETRY_TOL = 1e-9


def log_det(m: np.ndarray) -> float:
    """``log det(m)`` for symmetric ``m`` via Cholesky; ``-inf`` when not PD.

    >>> round(log_det(np.array([[2.0, -1.0], [-1.0, 2.0]])), 6)
    1.098612
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise GraphError(f"log_det needs a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
        raise GraphError("log_det needs a symmetric matrix")
    dmax = float(np.max(np.diag(m)))
    if not dmax > 0:
        return -math.inf
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return -math.inf
    pivots = np.diag(chol) ** 2
    if np.min(pivots) <= PIVOT_RTOL * dmax:
        return -math.inf
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def uncertainty_of(m: np.ndarray) -> float:
    """``-log det`` with ``+inf`` for singular systems."""
    return -log_det(m) + 0.0  # no -0.0 in reports


def reduced_global(graph: PoseGraph, nodes: Iterable[int]) -> tuple[np.ndarray, list[int]]:
    """Reduced global Laplacian anchored on the lowest id, plus its row order."""
    order = sorted(set(nodes))
    L = build_laplacian(graph, order)
    return L[1:, 1:], order[1:]


def set_uncertainty(graph: PoseGraph, nodes: Iterable[int]) -> float:
    """Global-map uncertainty for any node count (an empty or single-node map is 0)."""
    nodes = set(nodes)
    if len(nodes) < 2:
        return 0.0
    return uncertainty_of(reduced_global(graph, nodes)[0])


def global_uncertainty(graph: PoseGraph, k_g_edge: Iterable[int]) -> float:
    nodes = set(k_g_edge)
    if len(nodes) < 2:
        raise GraphError("global uncertainty needs at least two keyframes")
    return uncertainty_of(reduced_global(graph, nodes)[0])


def local_laplacian(
    graph: PoseGraph, k_loc: Iterable[int], k_fixed: Iterable[int], k: int
) -> tuple[np.ndarray, list[int]]:
    """Full local information Laplacian over ``k_loc | {k}`` (ascending ids).

    Off-diagonals use edges inside the local set only; each diagonal also
    collects the weight of edges into ``k_fixed``. Fixed keyframes add weight,
    never rows. The new keyframe ``k`` is treated like any local keyframe,
    including its edges to fixed ones.
    """
    k_loc, k_fixed = set(k_loc), set(k_fixed)
    if k_loc & k_fixed:
        raise GraphError(f"local and fixed sets overlap: {sorted(k_loc & k_fixed)}")
    if k in k_loc or k in k_fixed:
        raise GraphError(f"keyframe {k} must not be in the local or fixed set")
    order = sorted(k_loc | {k})
    L = build_laplacian(graph, order)
    if k_fixed:
        L[np.diag_indices_from(L)] += fixed_weights(graph, order, k_fixed)
    return L, order


def fixed_weights(graph: PoseGraph, order: list[int], k_fixed: Iterable[int]) -> np.ndarray:
    """Per-row total weight from ``order`` into the fixed set."""
    k_fixed = list(k_fixed)
    if not k_fixed:
        return np.zeros(len(order))
    nodes = list(order) + k_fixed
    W = weight_matrix(graph, nodes)
    return W[: len(order), len(order):].sum(axis=1)


def local_uncertainty(
    graph: PoseGraph, k_loc: Iterable[int], k_fixed: Iterable[int], k: int
) -> float:
    L, _ = local_laplacian(graph, k_loc, k_fixed, k)
    return uncertainty_of(L[1:, 1:])

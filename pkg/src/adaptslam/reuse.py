"""Incremental determinant/inverse reuse for candidate scoring.

With ``A`` the reduced information matrix of the current set and a candidate
``n`` carrying weights ``a`` to the current (non-anchor) rows and ``d`` total
weight into the set, the extended matrix is::

    [[A + diag(a), -a^T],
     [-a,           d  ]]

Its determinant is ``(d - a A'^{-1} a^T) det(A')`` with ``A' = A + diag(a)``.
``A'^{-1}`` and ``det(A')`` come from sequential Sherman-Morrison updates of
``B = A^{-1}``: each positive ``a_i`` is one rank-1 correction applied to the
running inverse, and ``det`` picks up ``1 + a_i [running B]_{ii}`` per term.

Because every correction is supported on ``supp(a)``, the principal block of
the running inverse on ``supp(a)`` evolves independently of the rest, so
scoring only needs ``B[supp, supp]``. ``score_candidates`` does this for a
whole batch at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .uncertainty import PIVOT_RTOL, log_det, uncertainty_of

REFRESH_EVERY = 50


class ReuseError(ValueError):
    """Base matrix is not positive definite."""


class NumericalDegeneracyError(ArithmeticError):
    """A Sherman-Morrison denominator ``1 + a_i B_ii`` became non-positive."""


@dataclass(frozen=True)
class CandidateDelta:
    a: np.ndarray
    d: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        if np.any(a < 0):
            raise ValueError("candidate weights must be non-negative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "d", float(self.d))


@dataclass
class ReuseState:
    A: np.ndarray
    inv_A: np.ndarray
    logdet_A: float
    extensions: int = 0
    refreshes: int = field(default=0, compare=False)

    @property
    def base_matrix_dim(self) -> int:
        return self.A.shape[0]

    @property
    def det_A(self) -> float:
        return math.exp(self.logdet_A)

    @cached_property
    def outer_products(self) -> np.ndarray:
        """``outer_products[i] = B_i B_i^T`` for column ``i`` of ``B``; built on first use."""
        B = self.inv_A
        return np.einsum("ji,ki->ijk", B, B)


def init_reuse_state(A: np.ndarray) -> ReuseState:
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ReuseError(f"expected a square matrix, got shape {A.shape}")
    ld = log_det(A)
    if ld == -math.inf:
        raise ReuseError("base matrix is singular or not positive definite")
    if A.shape[0] == 0:
        return ReuseState(A, np.zeros((0, 0)), 0.0)
    chol = np.linalg.cholesky(A)
    linv = np.linalg.inv(chol)
    B = linv.T @ linv
    return ReuseState(A, 0.5 * (B + B.T), ld)


def _check_dim(state: ReuseState, delta: CandidateDelta) -> None:
    if delta.a.shape[0] != state.base_matrix_dim:
        raise ValueError(
            f"candidate has {delta.a.shape[0]} weights, state has dimension {state.base_matrix_dim}"
        )


def _sequential_sm(B: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, float]:
    """Apply the rank-1 corrections for every non-zero ``a_i`` to a copy of ``B``.

    Returns the running inverse and ``sum log(1 + a_i B_ii)``.
    """
    B = B.copy()
    logf = 0.0
    for i in np.flatnonzero(a):
        denom = 1.0 + a[i] * B[i, i]
        if denom <= 0:
            raise NumericalDegeneracyError(f"1 + a_{i} B_{i}{i} = {denom} <= 0")
        logf += math.log(denom)
        col = B[:, i].copy()
        B -= (a[i] / denom) * np.outer(col, col)
    return B, logf


def extended_inverse(state: ReuseState, delta: CandidateDelta) -> np.ndarray:
    """``(A + diag(a))^{-1}`` by sequential Sherman-Morrison on the reused inverse."""
    _check_dim(state, delta)
    return _sequential_sm(state.inv_A, delta.a)[0]


def extended_log_determinant(state: ReuseState, delta: CandidateDelta) -> float:
    _check_dim(state, delta)
    supp = np.flatnonzero(delta.a)
    block = state.inv_A[np.ix_(supp, supp)]
    return state.logdet_A + _sequential_sm(block, delta.a[supp])[1]


def extended_determinant(state: ReuseState, delta: CandidateDelta) -> float:
    return math.exp(extended_log_determinant(state, delta))


def candidate_uncertainty(state: ReuseState, delta: CandidateDelta) -> float:
    """Uncertainty of the set extended by one candidate, ``+inf`` if singular."""
    _check_dim(state, delta)
    supp = np.flatnonzero(delta.a)
    a = delta.a[supp]
    block, logf = _sequential_sm(state.inv_A[np.ix_(supp, supp)], a)
    schur = delta.d - float(a @ block @ a)
    if schur <= PIVOT_RTOL * max(delta.d, 1.0):
        return math.inf
    return -(math.log(schur) + state.logdet_A + logf)


def score_candidates(state: ReuseState, a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Batched ``candidate_uncertainty`` for rows of ``a`` (shape ``C x m``)."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float).reshape(-1)
    C = d.shape[0]
    if a.shape != (C, state.base_matrix_dim):
        raise ValueError(f"weights shape {a.shape} does not match ({C}, {state.base_matrix_dim})")
    if C == 0:
        return np.zeros(0)
    nz = a != 0
    p = int(nz.sum(axis=1).max()) if a.size else 0
    logf = np.zeros(C)
    quad = np.zeros(C)
    if p:
        # non-zero entries first; padding slots carry a = 0 and are exact no-ops
        idx = np.argsort(~nz, axis=1, kind="stable")[:, :p]
        vals = np.take_along_axis(a, idx, axis=1)
        blk = state.inv_A[idx[:, :, None], idx[:, None, :]]
        for j in range(p):
            aj = vals[:, j]
            denom = 1.0 + aj * blk[:, j, j]
            if np.any(denom <= 0):
                raise NumericalDegeneracyError("non-positive Sherman-Morrison denominator")
            logf += np.log(denom)
            col = blk[:, :, j].copy()
            blk -= (aj / denom)[:, None, None] * col[:, :, None] * col[:, None, :]
        quad = np.einsum("ci,cij,cj->c", vals, blk, vals)
    schur = d - quad
    out = np.full(C, math.inf)
    ok = schur > PIVOT_RTOL * np.maximum(d, 1.0)
    out[ok] = -(np.log(schur[ok]) + state.logdet_A + logf[ok])
    return out


def bordered_matrix(A: np.ndarray, delta: CandidateDelta) -> np.ndarray:
    """Reduced information matrix with the candidate appended as the last row."""
    m = A.shape[0]
    M = np.empty((m + 1, m + 1))
    M[:m, :m] = A + np.diag(delta.a)
    M[:m, m] = -delta.a
    M[m, :m] = -delta.a
    M[m, m] = delta.d
    return M


def scratch_uncertainty(A: np.ndarray, delta: CandidateDelta) -> float:
    """Reference path: build the extended matrix and factorize it."""
    return uncertainty_of(bordered_matrix(A, delta))


def extend_state(state: ReuseState, delta: CandidateDelta) -> ReuseState:
    """Commit a candidate: new state for the bordered matrix.

    Costs ``O(nnz(a) m^2)``; every ``REFRESH_EVERY`` commits the state is
    rebuilt from a fresh factorization to bound accumulated error.
    """
    _check_dim(state, delta)
    A_new = bordered_matrix(state.A, delta)
    if state.extensions + 1 >= REFRESH_EVERY:
        fresh = init_reuse_state(A_new)
        fresh.refreshes = state.refreshes + 1
        return fresh
    Bp, logf = _sequential_sm(state.inv_A, delta.a)
    u = Bp @ delta.a
    schur = delta.d - float(delta.a @ u)
    if schur <= PIVOT_RTOL * max(delta.d, 1.0):
        raise ReuseError("committed candidate makes the system singular")
    m = state.base_matrix_dim
    B = np.empty((m + 1, m + 1))
    B[:m, :m] = Bp + np.outer(u, u) / schur
    B[:m, m] = u / schur
    B[m, :m] = u / schur
    B[m, m] = 1.0 / schur
    return ReuseState(
        A_new, B, state.logdet_A + logf + math.log(schur),
        extensions=state.extensions + 1, refreshes=state.refreshes,
    )

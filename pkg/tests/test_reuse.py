import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from adaptslam.checks import random_extension
from adaptslam.reuse import (
    REFRESH_EVERY,
    CandidateDelta,
    ReuseError,
    bordered_matrix,
    candidate_uncertainty,
    extend_state,
    extended_determinant,
    extended_inverse,
    extended_log_determinant,
    init_reuse_state,
    score_candidates,
    scratch_uncertainty,
)
from adaptslam.uncertainty import log_det

seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(1, 30), st.floats(0.05, 1.0))
def test_candidate_uncertainty_matches_scratch(seed, dim, density):
    A, a, d = random_extension(np.random.default_rng(seed), dim, density=density)
    delta = CandidateDelta(a, d)
    ref = scratch_uncertainty(A, delta)
    got = candidate_uncertainty(init_reuse_state(A), delta)
    assert got == ref or abs(got - ref) <= 1e-7 * max(abs(ref), 1.0)


@given(seeds, st.integers(1, 12))
def test_extended_inverse_and_determinant(seed, dim):
    A, a, _ = random_extension(np.random.default_rng(seed), dim)
    state = init_reuse_state(A)
    delta = CandidateDelta(a, 0.0)
    M = A + np.diag(a)
    assert np.allclose(extended_inverse(state, delta), np.linalg.inv(M), rtol=1e-8, atol=1e-12)
    assert math.isclose(extended_log_determinant(state, delta), log_det(M), rel_tol=1e-9, abs_tol=1e-9)


def test_extended_determinant_small():
    state = init_reuse_state(np.array([[2.0]]))
    assert math.isclose(extended_determinant(state, CandidateDelta([3.0], 4.0)), 5.0)
    # bordered [[5, 3], [3, 4]] has det 11
    assert math.isclose(candidate_uncertainty(state, CandidateDelta([3.0], 4.0)), -math.log(11.0))


@given(seeds, st.integers(1, 15), st.integers(1, 40))
def test_batched_scores_match_single(seed, dim, count):
    rng = np.random.default_rng(seed)
    A, _, _ = random_extension(rng, dim)
    state = init_reuse_state(A)
    a = np.where(rng.random((count, dim)) < 0.4, rng.uniform(1, 500, (count, dim)), 0.0)
    d = a.sum(axis=1) + rng.uniform(0, 50, count) * (rng.random(count) < 0.8)
    batched = score_candidates(state, a, d)
    single = [candidate_uncertainty(state, CandidateDelta(a[i], d[i])) for i in range(count)]
    for b, s in zip(batched, single):
        assert (math.isinf(b) and math.isinf(s)) or abs(b - s) <= 1e-9 * max(1.0, abs(s))


def test_isolated_candidate_is_singular():
    state = init_reuse_state(np.eye(3) * 2)
    assert candidate_uncertainty(state, CandidateDelta(np.zeros(3), 0.0)) == math.inf
    assert score_candidates(state, np.zeros((2, 3)), np.zeros(2)).tolist() == [math.inf, math.inf]


def test_singular_base_rejected():
    with pytest.raises(ReuseError):
        init_reuse_state(np.ones((2, 2)))
    with pytest.raises(ReuseError):
        init_reuse_state(np.ones((2, 3)))


def test_negative_weights_and_dimension_mismatch():
    with pytest.raises(ValueError):
        CandidateDelta([-1.0, 2.0], 3.0)
    state = init_reuse_state(np.eye(2))
    with pytest.raises(ValueError):
        candidate_uncertainty(state, CandidateDelta([1.0], 3.0))
    with pytest.raises(ValueError):
        score_candidates(state, np.ones((3, 1)), np.ones(3))


@given(seeds, st.integers(1, 8), st.integers(1, 12))
def test_extend_state_tracks_bordered_matrix(seed, dim, steps):
    rng = np.random.default_rng(seed)
    A, _, _ = random_extension(rng, dim)
    state = init_reuse_state(A)
    M = A
    for _ in range(steps):
        m = M.shape[0]
        a = np.where(rng.random(m) < 0.5, rng.uniform(1, 50, m), 0.0)
        delta = CandidateDelta(a, a.sum() + rng.uniform(1, 50))
        state = extend_state(state, delta)
        M = bordered_matrix(M, delta)
    assert np.allclose(state.A, M)
    assert np.allclose(state.inv_A, np.linalg.inv(M), rtol=1e-7, atol=1e-10)
    assert math.isclose(state.logdet_A, log_det(M), rel_tol=1e-9, abs_tol=1e-9)


def test_state_refreshes_periodically():
    rng = np.random.default_rng(0)
    state = init_reuse_state(np.array([[3.0]]))
    for _ in range(REFRESH_EVERY + 5):
        m = state.base_matrix_dim
        a = np.zeros(m)
        a[-1] = rng.uniform(1, 10)
        state = extend_state(state, CandidateDelta(a, a.sum() + 1.0))
    assert state.refreshes == 1
    assert state.extensions == 5


def test_empty_base_state():
    state = init_reuse_state(np.zeros((0, 0)))
    assert candidate_uncertainty(state, CandidateDelta(np.zeros(0), 4.0)) == -math.log(4.0)


def test_init_state_small_examples():
    s = init_reuse_state(np.array([[2.0]]))
    assert math.isclose(s.det_A, 2.0) and np.allclose(s.inv_A, [[0.5]])
    assert np.allclose(s.outer_products, [[[0.25]]])
    s = init_reuse_state(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert math.isclose(s.det_A, 3.0)
    assert np.allclose(s.inv_A, np.array([[2.0, 1.0], [1.0, 2.0]]) / 3)
    for i in range(2):
        assert np.allclose(s.outer_products[i], np.outer(s.inv_A[:, i], s.inv_A[:, i]))


def test_extended_inverse_scalar_and_zero():
    s = init_reuse_state(np.array([[2.0]]))
    assert np.allclose(extended_inverse(s, CandidateDelta([1.0], 0.0)), [[1 / 3]])
    assert math.isclose(extended_determinant(s, CandidateDelta([1.0], 0.0)), 3.0)
    assert np.array_equal(extended_inverse(s, CandidateDelta([0.0], 0.0)), s.inv_A)


def test_candidate_linked_only_to_anchor():
    # path k - 2 plus a candidate on k alone: determinant gains exactly w_{k,n}
    state = init_reuse_state(np.array([[4.0]]))
    u = candidate_uncertainty(state, CandidateDelta([0.0], 6.0))
    assert math.isclose(u, -math.log(4.0) - math.log(6.0))


@given(st.integers(0, 2**32 - 1), st.integers(3, 9))
def test_bordered_matrix_is_the_grown_laplacian(seed, n):
    from adaptslam.checks import random_connected_graph
    from adaptslam.graph import build_laplacian, weight_matrix

    g = random_connected_graph(np.random.default_rng(seed), n)
    order = g.nodes
    L_small = build_laplacian(g, order[:-1])[1:, 1:]
    assume(log_det(L_small) > -math.inf)  # the prefix may be disconnected
    W = weight_matrix(g, order)
    a = W[-1, 1:-1]
    delta = CandidateDelta(a, W[-1, :-1].sum())
    assert np.allclose(bordered_matrix(L_small, delta), build_laplacian(g, order)[1:, 1:])
    state = extend_state(init_reuse_state(L_small), delta)
    assert np.allclose(state.inv_A @ build_laplacian(g, order)[1:, 1:], np.eye(n - 1), atol=1e-8)

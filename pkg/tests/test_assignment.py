import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from got_align.assignment import (
    DykstraConfig,
    SoftAssignment,
    dykstra_backward,
    dykstra_forward,
    dykstra_project,
    kl_project_cols,
    kl_project_rows,
    covering_kmax,
    kmax_bounds,
    resolve_kmax,
    round_to_hard,
    sinkhorn_project,
    validate_kmax,
)
from got_align.errors import InfeasibleKmax, Overflow, ValidationError, ZeroColumn


@pytest.mark.parametrize(
    "r, c, k, ok",
    [(5, 5, 1, True), (5, 5, 2, False), (4, 10, 7, True), (4, 10, 8, False), (4, 10, 1, True), (4, 10, 0, False)],
)
def test_validate_kmax(r, c, k, ok):
    assert validate_kmax(r, c, k) is ok


def test_kmax_bounds_and_auto():
    assert kmax_bounds(4, 10) == (1, 7)
    assert covering_kmax(4, 10) == 3
    assert resolve_kmax("auto", 4, 10) == 7
    with pytest.raises(InfeasibleKmax, match="1.*7"):
        resolve_kmax(8, 4, 10)
    with pytest.raises(ValidationError):
        resolve_kmax(2.5, 4, 10)


@pytest.mark.parametrize("row_sum, k, factor", [(0.5, 3, 2.0), (5.0, 3, 0.6), (2.0, 3, 1.0)])
def test_row_projection_examples(row_sum, k, factor):
    X = np.array([[row_sum / 2, row_sum / 2]])
    np.testing.assert_allclose(kl_project_rows(X, k), X * factor)


def test_column_projection_examples(rng):
    np.testing.assert_allclose(kl_project_cols(np.array([[2.0], [2.0]])), [[0.5], [0.5]])
    X = rng.random((3, 5))
    X /= X.sum(axis=0)
    np.testing.assert_allclose(kl_project_cols(X), X, atol=1e-12)
    np.testing.assert_allclose(kl_project_cols(rng.random((3, 5)) + 0.1).sum(axis=0), 1.0)


def test_column_projection_zero_column():
    with pytest.raises(ZeroColumn):
        kl_project_cols(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_dykstra_uniform_examples():
    np.testing.assert_allclose(dykstra_project(np.zeros((4, 4)), 1).matrix, np.full((4, 4), 0.25), atol=1e-12)
    np.testing.assert_allclose(dykstra_project(np.zeros((1, 2)), 2).matrix, [[1.0, 1.0]], atol=1e-12)


def ranked_perms(X):
    n = X.shape[0]
    scores = sorted(
        ((sum(X[i, p[i]] for i in range(n)), p) for p in itertools.permutations(range(n))), reverse=True
    )
    return scores


def separated_instance(rng, n, gap):
    """Random matrix whose best permutation beats the runner-up by ``gap``."""
    while True:
        X = rng.standard_normal((n, n))
        ranked = ranked_perms(X)
        if ranked[0][0] - ranked[1][0] >= gap:
            return X, np.array(ranked[0][1])


def test_dykstra_low_temperature_matches_brute_force(rng):
    # with a gap of 0.1 the runner-up carries weight ~exp(-10) at tau=0.01
    X, perm = separated_instance(rng, 4, 0.1)
    P = dykstra_project(X, 1, DykstraConfig(tau=0.01, max_iter=5000)).matrix
    np.testing.assert_allclose(P, np.eye(4)[perm], atol=1e-2)


def test_dykstra_near_tie_splits_mass():
    # two permutations differing by d share mass with cross ratio exp(-d / tau)
    X = np.array([[0.0, 0.0], [0.0, -0.02]])
    P = dykstra_project(X, 1, DykstraConfig(tau=0.01, max_iter=10000, convergence_tol=1e-13)).matrix
    ratio = P[0, 1] * P[1, 0] / (P[0, 0] * P[1, 1])
    assert ratio == pytest.approx(np.exp(0.02 / 0.01), rel=1e-6)


def test_dykstra_entropic_optimality_rectangular(rng):
    # KKT check: log P = X / tau + a_i + b_j with a_i = 0 on rows strictly inside [1, k]
    X = rng.standard_normal((3, 7))
    cfg = DykstraConfig(tau=0.5, max_iter=5000, convergence_tol=1e-13)
    P = dykstra_project(X, 4, cfg)
    assert P.is_feasible()
    R = np.log(P.matrix) - X / 0.5
    # remove column potentials, then rows must be constant
    R = R - R[0]
    np.testing.assert_allclose(R, R[:, :1] * np.ones((1, 7)), atol=1e-8)


def test_dykstra_rejects_non_finite():
    with pytest.raises(ValidationError):
        dykstra_project(np.array([[np.nan, 0.0]]), 2)


def test_dykstra_overflow():
    with pytest.raises(Overflow):
        dykstra_project(np.array([[1e308, -1e308]]), 2, DykstraConfig(tau=1e-10))


def test_dykstra_invalid_kmax():
    with pytest.raises(InfeasibleKmax):
        dykstra_project(np.zeros((3, 3)), 2)


def test_dykstra_batched_matches_loop(rng):
    X = rng.standard_normal((5, 3, 6))
    cfg = DykstraConfig()
    batch, _ = dykstra_forward(X, 3, cfg)
    for s in range(5):
        np.testing.assert_allclose(batch[s], dykstra_project(X[s], 3, cfg).matrix, atol=1e-12)


@pytest.mark.parametrize("shape, k", [((3, 3), 1), ((2, 5), 4), ((3, 7), 3)])
def test_dykstra_backward_finite_differences(rng, shape, k):
    cfg = DykstraConfig(tau=0.7, max_iter=15)
    X = rng.standard_normal(shape)
    G = rng.standard_normal(shape)
    _, tape = dykstra_forward(X, k, cfg, record=True)
    grad = dykstra_backward(tape, G)
    h = 1e-6
    fd = np.zeros(shape)
    for idx in np.ndindex(*shape):
        E = np.zeros(shape)
        E[idx] = h
        fd[idx] = (np.sum(G * dykstra_forward(X + E, k, cfg)[0]) - np.sum(G * dykstra_forward(X - E, k, cfg)[0])) / (2 * h)
    np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-8)


def test_sinkhorn_examples():
    np.testing.assert_allclose(sinkhorn_project(np.zeros((3, 3))).matrix, np.full((3, 3), 1 / 3), atol=1e-12)
    perm = np.eye(4)[[2, 0, 3, 1]]
    P = sinkhorn_project(20 * perm, DykstraConfig(tau=0.1, max_iter=100)).matrix
    np.testing.assert_allclose(P, perm, atol=1e-3)


def test_sinkhorn_requires_square():
    with pytest.raises(ValidationError):
        sinkhorn_project(np.zeros((2, 3)))


def test_sinkhorn_matches_dykstra(rng):
    cfg = DykstraConfig(tau=1.0, max_iter=5000, convergence_tol=1e-12)
    X = rng.standard_normal((5, 5))
    np.testing.assert_allclose(dykstra_project(X, 1, cfg).matrix, sinkhorn_project(X, cfg).matrix, atol=1e-5)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_dykstra_output_is_feasible(r, extra, seed):
    c = r + extra
    hi = kmax_bounds(r, c)[1]
    rng = np.random.default_rng(seed)
    k = int(rng.integers(covering_kmax(r, c), hi + 1))
    X = 3 * rng.standard_normal((r, c))
    P = dykstra_project(X, k, DykstraConfig(max_iter=1000))
    assert P.is_feasible(), P.violations()


def test_round_to_hard_examples():
    H = np.eye(3)[[1, 2, 0]]
    np.testing.assert_array_equal(round_to_hard(SoftAssignment(H, 1)).matrix, H)
    P = SoftAssignment(np.array([[0.9, 0.6], [0.1, 0.4]]), 1)
    np.testing.assert_array_equal(round_to_hard(P).matrix, np.eye(2))
    U = round_to_hard(SoftAssignment(np.full((2, 4), 0.5), 3)).matrix
    assert U.sum() == 4
    assert np.all(U.sum(axis=1) >= 1)
    np.testing.assert_array_equal(U.sum(axis=0), 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_round_to_hard_is_feasible(r, extra, seed):
    c = r + extra
    rng = np.random.default_rng(seed)
    hi = kmax_bounds(r, c)[1]
    k = int(rng.integers(covering_kmax(r, c), hi + 1))
    P = dykstra_project(rng.standard_normal((r, c)), k)
    H = round_to_hard(P)
    assert H.is_hard and H.is_feasible()
    assert np.all(H.matrix.sum(axis=1) <= k)


def test_kmax_below_covering_still_rounds(rng, caplog):
    # 3 rows of capacity 1 cannot hold 5 columns; every column still gets an owner
    assert resolve_kmax(1, 3, 5) == 1
    assert "cannot cover" in caplog.text or "no assignment" in caplog.text
    P = dykstra_project(rng.standard_normal((3, 5)), 1)
    assert np.all(np.isfinite(P.matrix))
    H = round_to_hard(P).matrix
    np.testing.assert_array_equal(H.sum(axis=0), 1)
    assert np.all(H.sum(axis=1) >= 1)


def test_round_to_hard_recovers_sharp_permutations(rng):
    for _ in range(10):
        X, perm = separated_instance(rng, 5, 0.5)
        P = sinkhorn_project(X, DykstraConfig(tau=0.05, max_iter=2000))
        np.testing.assert_array_equal(round_to_hard(P).matrix, np.eye(5)[perm])

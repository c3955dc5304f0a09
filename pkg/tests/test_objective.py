import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kcsr.data import REFERENCE_CIRCLE_COUNTS
from kcsr.errors import InputError, NumericalError
from kcsr.kernels import KernelSpec, build_kernel_matrix
from kcsr.objective import (
    MinibatchProblem,
    ObjectiveParams,
    auto_lambda,
    evaluate_objective,
    finite_diff_grad,
    grad_wrt_gamma,
    grad_wrt_indicator,
    objective_value,
)
from kcsr.sigmoid import dtau_dbeta, sigmoid_chain


def hard_indicator(sizes):
    k, n = len(sizes), sum(sizes)
    G = np.zeros((k, n))
    start = 0
    for i, s in enumerate(sizes):
        G[i, start:start + s] = 1.0
        start += s
    return G


def test_single_segment_closed_form(rng):
    X = rng.normal(size=(15, 2))
    K = build_kernel_matrix(X, KernelSpec("rbf", 1.0)).values
    lam = 0.3
    expected = np.trace(K) - K.sum() / 15 + lam * 15**2
    assert evaluate_objective(np.ones((1, 15)), K, lam, 0.0) == pytest.approx(expected, rel=1e-12)


def test_identity_kernel_gives_n_minus_k():
    G = hard_indicator([3, 5, 2, 4])
    assert evaluate_objective(G, np.eye(14), 0.0, 0.0) == pytest.approx(10.0, abs=1e-12)


def test_balance_term_on_circle_sizes():
    G = hard_indicator(REFERENCE_CIRCLE_COUNTS)
    n = sum(REFERENCE_CIRCLE_COUNTS)
    value = evaluate_objective(G, np.zeros((n, n)), 1.0, 0.0)
    assert value == 3_817_473


def test_singular_indicator_names_row():
    G = np.array([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NumericalError, match="row 2"):
        evaluate_objective(G, np.eye(3), 0.0, 0.0)
    # The default ridge keeps it solvable.
    assert np.isfinite(evaluate_objective(G, np.eye(3), 0.0, 1e-8))


def test_auto_lambda():
    assert auto_lambda(1.0, 4, 1000) == pytest.approx(4e-5)


def test_indicator_gradient_zero_kernel():
    G = np.array([[0.7, 0.2, 0.0], [0.3, 0.8, 1.0]])
    assert np.all(grad_wrt_indicator(G, np.zeros((3, 3)), 0.0, 1e-8) == 0)
    # J = lam ||G 1||^2 has derivative 2 lam (G 1) in every column.
    D = grad_wrt_indicator(G, np.zeros((3, 3)), 0.5, 1e-8)
    np.testing.assert_allclose(D, 2 * 0.5 * np.outer(G.sum(axis=1), np.ones(3)), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 4), p=st.integers(4, 20),
       lam=st.sampled_from([0.0, 0.01, 1.0]))
def test_indicator_gradient_finite_differences(seed, k, p, lam):
    r = np.random.default_rng(seed)
    G = r.uniform(0.05, 1.0, size=(k, p))
    X = r.normal(size=(p, 2))
    K = build_kernel_matrix(X, KernelSpec("rbf", 1.0)).values
    ridge = 1e-3
    D = grad_wrt_indicator(G, K, lam, ridge)
    h = 1e-6
    fd = np.empty_like(G)
    for i in range(k):
        for j in range(p):
            E = np.zeros_like(G)
            E[i, j] = h
            fd[i, j] = (evaluate_objective(G + E, K, lam, ridge)
                        - evaluate_objective(G - E, K, lam, ridge)) / (2 * h)
    np.testing.assert_allclose(D, fd, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(fd).max()))


def test_dtau_dbeta_at_midpoint_is_minus_quarter_alpha():
    assert dtau_dbeta([7.0], 10.0, [7.0])[0, 0] == -2.5


def _away_from_kinks(gamma, params, tol=1e-3):
    betas, tau, _ = sigmoid_chain(gamma, params.k, params.alpha, params.n)
    pos = np.arange(1, params.n + 1)
    s = 1 / (1 + np.exp(-params.alpha * (pos[None, :] - betas[:, None])))
    live = np.any((s > tol) & (s < 1 - tol), axis=0)
    near = np.abs(tau - np.round(tau)) < tol
    return not np.any(near & live)


@pytest.mark.parametrize("lam", [0.0, 0.01])
def test_gamma_gradient_finite_differences(lam):
    r = np.random.default_rng(7)
    X = r.normal(size=(60, 2))
    K = build_kernel_matrix(X, KernelSpec("rbf", 1.0))
    params = ObjectiveParams(lam, 10.0, 3, 60)
    checked = 0
    while checked < 10:
        gamma = r.normal(size=3)
        if not _away_from_kinks(gamma, params):
            continue
        g = grad_wrt_gamma(gamma, K, params).grad_gamma
        fd = finite_diff_grad(gamma, K, params)
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-4
        np.testing.assert_allclose(g, fd, rtol=1e-3, atol=1e-3 * np.abs(fd).max())
        checked += 1


def test_finite_diff_constant_objective():
    params = ObjectiveParams(0.0, 10.0, 3, 10)
    fd = finite_diff_grad(np.array([0.1, -0.2, 0.3]), np.zeros((10, 10)), params)
    assert np.all(fd == 0)


def test_objective_affine_in_lambda(rng):
    X = rng.normal(size=(30, 2))
    K = build_kernel_matrix(X, KernelSpec("rbf", 1.0))
    gamma = rng.normal(size=3)
    g0 = finite_diff_grad(gamma, K, ObjectiveParams(0.0, 10.0, 3, 30))
    g1 = finite_diff_grad(gamma, K, ObjectiveParams(0.01, 10.0, 3, 30))
    g2 = finite_diff_grad(gamma, K, ObjectiveParams(0.02, 10.0, 3, 30))
    np.testing.assert_allclose(g2 - g0, 2 * (g1 - g0), rtol=1e-4, atol=1e-6)


def test_restriction_to_all_indices_is_identity(rng):
    X = rng.normal(size=(40, 3))
    spec = KernelSpec("rbf", 1.5)
    params = ObjectiveParams(0.01, 10.0, 4, 40)
    gamma = rng.normal(size=4)
    full = grad_wrt_gamma(gamma, build_kernel_matrix(X, spec), params)
    mb = MinibatchProblem(X, spec, params).minibatch(gamma, np.arange(40))
    assert mb.value == full.value
    assert np.array_equal(mb.grad_gamma, full.grad_gamma)


def test_minibatch_value_uses_original_positions(rng):
    X = rng.normal(size=(50, 2))
    spec = KernelSpec("rbf", 1.0)
    params = ObjectiveParams(0.0, 10.0, 3, 50)
    gamma = rng.normal(size=3)
    idx = np.array([2, 9, 17, 30, 44, 49])
    K = build_kernel_matrix(X, spec).values[np.ix_(idx, idx)]
    _, _, G = sigmoid_chain(gamma, 3, 10.0, 50)
    expected = evaluate_objective(G[:, idx], K, 0.0, params.ridge_for(idx.size))
    assert objective_value(gamma, K, params, idx) == pytest.approx(expected, rel=1e-13)


def test_unsorted_indices_rejected(rng):
    X = rng.normal(size=(10, 2))
    params = ObjectiveParams(0.0, 10.0, 2, 10)
    with pytest.raises(InputError):
        grad_wrt_gamma(np.zeros(2), np.eye(3), params, [3, 1, 5])


def test_full_value_tiled_matches_dense(rng):
    X = rng.normal(size=(70, 2))
    spec = KernelSpec("rbf", 1.0)
    params = ObjectiveParams(0.02, 10.0, 3, 70)
    gamma = rng.normal(size=3)
    dense = objective_value(gamma, build_kernel_matrix(X, spec), params)
    assert MinibatchProblem(X, spec, params).full_value(gamma, 16) == pytest.approx(dense, rel=1e-10)


def test_objective_bounds(rng):
    X = rng.normal(size=(40, 2))
    K = build_kernel_matrix(X, KernelSpec("rbf", 1.0))
    for _ in range(20):
        gamma = rng.normal(size=4)
        _, _, G = sigmoid_chain(gamma, 4, 10.0, 40)
        assert evaluate_objective(G, K, 0.0, 0.0) >= -1e-9
        rows = G.sum(axis=1)
        assert rows @ rows >= 40**2 / 4 - 1e-9


def test_deterministic(rng):
    X = rng.normal(size=(30, 2))
    K = build_kernel_matrix(X, KernelSpec("rbf", 1.0))
    params = ObjectiveParams(0.01, 10.0, 3, 30)
    gamma = rng.normal(size=3)
    a = grad_wrt_gamma(gamma, K, params)
    b = grad_wrt_gamma(gamma, K, params)
    assert a.value == b.value and np.array_equal(a.grad_gamma, b.grad_gamma)


def test_multi_sequence_gradient_finite_differences(rng):
    lengths = (25, 30)
    X = rng.normal(size=(55, 2))
    K = build_kernel_matrix(X, KernelSpec("rbf", 1.0))
    params = ObjectiveParams(0.01, 10.0, 3, 55, lengths=lengths)
    gamma = rng.normal(size=6)
    g = grad_wrt_gamma(gamma, K, params).grad_gamma
    fd = finite_diff_grad(gamma, K, params)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-4

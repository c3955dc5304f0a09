"""Balanced kernel-clustering objective over the relaxed indicator and its gradient.

    J(G) = Tr(L K) + lam * ||G 1||^2,   L = I - G^T (G G^T + ridge I)^{-1} G

and J(gamma) obtained by composing with the sigmoid chain. The gradient is the
hand-derived chain dJ/dG . dG/dtau . dtau/dbeta . dbeta/dgamma.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from kcsr import kernels
from kcsr.errors import InputError, NumericalError
from kcsr.kernels import KernelMatrix, KernelSpec
from kcsr.sigmoid import (
    dbeta_dgamma,
    dbeta_dgamma_multi,
    dindicator_dtau,
    dtau_dbeta,
    sigmoid_chain,
)

RIDGE_SCALE = 1e-8
LAMBDA_SCALE = 1e-2


@dataclass(frozen=True)
class ObjectiveParams:
    """Hyperparameters of J(gamma).

    ``ridge=None`` means RIDGE_SCALE * p / k for a p-column indicator, i.e. the
    trace of G G^T for a hard indicator, scaled down. It does not depend on G,
    so the analytic gradient stays exact.
    """

    lam: float
    alpha: float
    k: int
    n: int
    ridge: Optional[float] = None
    lengths: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.lam < 0:
            raise InputError(f"lambda must be non-negative, got {self.lam}")
        if not self.alpha > 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if self.k < 1:
            raise InputError(f"k must be >= 1, got {self.k}")
        if self.ridge is not None and self.ridge < 0:
            raise InputError(f"ridge must be non-negative, got {self.ridge}")
        if self.lengths is not None and sum(self.lengths) != self.n:
            raise InputError("block lengths do not sum to n")

    def ridge_for(self, p: int) -> float:
        return RIDGE_SCALE * p / self.k if self.ridge is None else self.ridge

    @property
    def gamma_size(self) -> int:
        return self.k * (1 if self.lengths is None else len(self.lengths))


@dataclass(frozen=True)
class GradientReport:
    value: float
    grad_gamma: np.ndarray


def auto_lambda(mean_diag: float, k: int, p: int) -> float:
    """LAMBDA_SCALE * Tr(K) / (p^2 / k): both objective terms comparable at start."""
    return LAMBDA_SCALE * mean_diag * k / p


def _values(K) -> np.ndarray:
    return K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=np.float64)


def _factor(G: np.ndarray, ridge: float):
    A = G @ G.T
    A[np.diag_indices_from(A)] += ridge
    try:
        return cho_factor(A, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        rows = G.sum(axis=1)
        worst = int(np.argmin(rows))
        raise NumericalError(
            f"G G^T is singular: segment row {worst + 1} has mass {rows[worst]:.3g}",
            state={"row_sums": rows},
        ) from exc


def _terms(G: np.ndarray, Kv: np.ndarray, ridge: float):
    if G.shape[1] != Kv.shape[0] or Kv.shape[0] != Kv.shape[1]:
        raise InputError(f"shape mismatch: G {G.shape}, K {Kv.shape}")
    cf = _factor(G, ridge)
    GK = G @ Kv
    B = cho_solve(cf, GK)  # (GG^T)^-1 G K
    return cf, GK, B


def evaluate_objective(G, K, lam: float, ridge: float) -> float:
    G = np.asarray(G, dtype=np.float64)
    Kv = _values(K)
    _, _, B = _terms(G, Kv, ridge)
    rows = G.sum(axis=1)
    return float(np.trace(Kv) - np.sum(B * G) + lam * rows @ rows)


def _value_and_dG(G: np.ndarray, Kv: np.ndarray, lam: float, ridge: float):
    cf, _, B = _terms(G, Kv, ridge)
    rows = G.sum(axis=1)
    value = float(np.trace(Kv) - np.sum(B * G) + lam * rows @ rows)
    C = B @ G.T  # (GG^T)^-1 G K G^T
    AinvG = cho_solve(cf, G)
    dG = 2.0 * (C @ AinvG) - 2.0 * B + (2.0 * lam) * rows[:, None]
    return value, dG


def grad_wrt_indicator(G, K, lam: float, ridge: float) -> np.ndarray:
    """dJ/dG = 2 A^-1 G K G^T A^-1 G - 2 A^-1 G K + 2 lam G 1 1^T,  A = G G^T + ridge I."""
    return _value_and_dG(np.asarray(G, dtype=np.float64), _values(K), lam, ridge)[1]


def _positions(indices, n: int) -> np.ndarray:
    if indices is None:
        return np.arange(1, n + 1, dtype=np.float64)
    idx = np.asarray(indices)
    if idx.ndim != 1 or (idx.size > 1 and np.any(np.diff(idx) <= 0)):
        raise InputError("indices must be strictly increasing")
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InputError(f"indices out of range [0, {n - 1}]")
    return idx.astype(np.float64) + 1.0


def _check_gamma(gamma, params: ObjectiveParams) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.shape != (params.gamma_size,):
        raise InputError(f"gamma must have length {params.gamma_size}, got {gamma.shape}")
    return gamma


def objective_value(gamma, K, params: ObjectiveParams, indices=None) -> float:
    """End-to-end J(gamma) on K, whose rows correspond to ``indices`` (all samples if None)."""
    gamma = _check_gamma(gamma, params)
    pos = _positions(indices, params.n)
    Kv = _values(K)
    _, _, G = sigmoid_chain(gamma, params.k, params.alpha, params.n, params.lengths, pos)
    return evaluate_objective(G, Kv, params.lam, params.ridge_for(pos.size))


def grad_wrt_gamma(gamma, K, params: ObjectiveParams, indices=None) -> GradientReport:
    """Value and analytic gradient of J(gamma).

    ``indices`` are the 0-based original positions of the rows of K. Sigmoids are
    evaluated at those original positions, so a minibatch sees the full timeline.
    """
    gamma = _check_gamma(gamma, params)
    pos = _positions(indices, params.n)
    Kv = _values(K)
    if Kv.shape[0] != pos.size:
        raise InputError(f"kernel size {Kv.shape[0]} does not match {pos.size} indices")
    k = params.k
    betas, tau, G = sigmoid_chain(gamma, k, params.alpha, params.n, params.lengths, pos)
    value, dG = _value_and_dG(G, Kv, params.lam, params.ridge_for(pos.size))
    if k == 1:
        return GradientReport(value, np.zeros_like(gamma))
    dtau = np.sum(dG * dindicator_dtau(tau, k), axis=0)
    dbeta = dtau @ dtau_dbeta(betas, params.alpha, pos)
    if params.lengths is None:
        jac = dbeta_dgamma(gamma, params.n)
    else:
        jac = dbeta_dgamma_multi(gamma, params.lengths)
    grad = dbeta @ jac
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise NumericalError("non-finite objective or gradient", state={"gamma": gamma.copy()})
    return GradientReport(value, grad)


def finite_diff_grad(gamma, K, params: ObjectiveParams, h: float = 1e-6, indices=None) -> np.ndarray:
    """Central differences of ``objective_value``, one coordinate at a time."""
    if not h > 0:
        raise InputError("h must be positive")
    gamma = _check_gamma(gamma, params)
    out = np.empty_like(gamma)
    for c in range(gamma.size):
        e = np.zeros_like(gamma)
        e[c] = h
        out[c] = (objective_value(gamma + e, K, params, indices)
                  - objective_value(gamma - e, K, params, indices)) / (2 * h)
    return out


class FullBatchProblem:
    """J(gamma) on a precomputed full kernel matrix."""

    def __init__(self, K, params: ObjectiveParams):
        self.K = K
        self.params = params

    def value(self, gamma) -> float:
        return objective_value(gamma, self.K, self.params)

    def value_and_grad(self, gamma) -> GradientReport:
        return grad_wrt_gamma(gamma, self.K, self.params)


class MinibatchProblem:
    """J(gamma) restricted to index subsets; never builds more than a b x b kernel block.

    ``full_lam`` is the balance weight used by ``full_value``. A b-sample batch
    sees segment sizes scaled by b / n, so the full-sequence analogue of a batch
    weight lam is lam * b / n; None keeps ``params.lam``.
    """

    def __init__(self, X, spec: KernelSpec, params: ObjectiveParams, full_lam: Optional[float] = None):
        self.X = X
        self.spec = spec
        self.params = params
        self.full_lam = params.lam if full_lam is None else float(full_lam)

    def minibatch(self, gamma, indices) -> GradientReport:
        K = kernels.build_partial_kernel(self.X, indices, self.spec)
        return grad_wrt_gamma(gamma, K, self.params, indices)

    def full_value(self, gamma, tile: int) -> float:
        """Exact J over all samples, accumulating G K G^T over tile x tile kernel blocks."""
        p = self.params
        pos = np.arange(1, p.n + 1, dtype=np.float64)
        _, _, G = sigmoid_chain(gamma, p.k, p.alpha, p.n, p.lengths, pos)
        starts = range(0, p.n, tile)
        GKG = np.zeros((p.k, p.k))
        for a in starts:
            rows = np.arange(a, min(a + tile, p.n))
            for c in starts:
                cols = np.arange(c, min(c + tile, p.n))
                block = kernels.build_cross_kernel(self.X, rows, cols, self.spec)
                GKG += G[:, rows] @ block @ G[:, cols].T
        cf = _factor(G, p.ridge_for(p.n))
        trK = float(np.sum(kernels.kernel_diagonal(self.X, self.spec)))
        rs = G.sum(axis=1)
        return float(trK - np.trace(cho_solve(cf, GKG)) + self.full_lam * rs @ rs)

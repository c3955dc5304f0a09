"""The differentiable chain gamma -> beta -> tau -> G and its Jacobians.

Time positions are 1-based (sample j sits at coordinate j), so midpoints beta live
in [1, n]. Array positions elsewhere in the package are 0-based; callers convert
with ``positions = indices + 1``.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from kcsr.errors import InputError, NumericalError

TAU_TOL = 1e-9


def sigmoid(x, alpha: float, beta):
    """1 / (1 + exp(-alpha (x - beta))), overflow-free for any argument."""
    return expit(alpha * (np.asarray(x, dtype=np.float64) - beta))


def _softmax(gamma: np.ndarray) -> np.ndarray:
    w = np.exp(gamma - np.max(gamma))
    return w / np.sum(w)


def _cumulative_ratio(gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = _softmax(gamma)
    r = np.cumsum(w)[:-1]
    return w, np.minimum(r, 1.0)


def betas_from_gamma(gamma, n: int) -> np.ndarray:
    """Midpoints beta_i = 1 + (n - 1) r_i with r_i the cumulative softmax of gamma."""
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 1 or gamma.size < 1:
        raise InputError("gamma must be a non-empty vector")
    if gamma.size == 1:
        return np.empty(0)
    _, r = _cumulative_ratio(gamma)
    return (1.0 - r) + n * r


def dbeta_dgamma(gamma, n: int) -> np.ndarray:
    """(k-1) x k Jacobian of ``betas_from_gamma``."""
    gamma = np.asarray(gamma, dtype=np.float64)
    k = gamma.size
    if k == 1:
        return np.zeros((0, 1))
    w, r = _cumulative_ratio(gamma)
    lower = np.tril(np.ones((k - 1, k), dtype=bool))  # c <= i
    jac = np.where(lower, w[None, :] * (1.0 - r)[:, None], -w[None, :] * r[:, None])
    return (n - 1) * jac


def _block_bounds(lengths: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    ends = np.cumsum(lengths)
    starts = np.concatenate(([0], ends[:-1])) + 1
    return starts.astype(np.float64), ends.astype(np.float64)


def _check_multi(gamma: np.ndarray, lengths: Sequence[int]) -> int:
    m = len(lengths)
    if m < 1:
        raise InputError("need at least one block length")
    if any(int(n_p) < 1 for n_p in lengths):
        raise InputError("block lengths must be positive")
    if gamma.ndim != 1 or gamma.size % m != 0 or gamma.size == 0:
        raise InputError(f"gamma length {gamma.size} is not a multiple of m = {m}")
    return gamma.size // m


def betas_from_gamma_multi(gamma, lengths: Sequence[int]) -> np.ndarray:
    """Per-block midpoints: block p interpolates between its first and last coordinate."""
    gamma = np.asarray(gamma, dtype=np.float64)
    k = _check_multi(gamma, lengths)
    starts, ends = _block_bounds(lengths)
    out = []
    for p, block in enumerate(gamma.reshape(len(lengths), k)):
        if k == 1:
            continue
        _, r = _cumulative_ratio(block)
        out.append(starts[p] * (1.0 - r) + ends[p] * r)
    return np.concatenate(out) if out else np.empty(0)


def dbeta_dgamma_multi(gamma, lengths: Sequence[int]) -> np.ndarray:
    """Block-diagonal m(k-1) x mk Jacobian of ``betas_from_gamma_multi``."""
    gamma = np.asarray(gamma, dtype=np.float64)
    k = _check_multi(gamma, lengths)
    m = len(lengths)
    jac = np.zeros((m * (k - 1), m * k))
    for p, block in enumerate(gamma.reshape(m, k)):
        # beta = start + (end - start) r, same shape as the single-sequence case
        # with n - 1 replaced by the block span.
        span = int(lengths[p]) - 1
        jac[p * (k - 1):(p + 1) * (k - 1), p * k:(p + 1) * k] = dbeta_dgamma(block, span + 1)
    return jac


def _positions(n: int, positions) -> np.ndarray:
    if positions is None:
        return np.arange(1, n + 1, dtype=np.float64)
    return np.asarray(positions, dtype=np.float64)


def tau_from_betas(betas, alpha: float, n: int, positions=None) -> np.ndarray:
    """Soft segment label tau_j = 1 + sum_i sigmoid(j, alpha, beta_i).

    Evaluated at ``positions`` (1-based coordinates) when given, else at 1..n.
    """
    j = _positions(n, positions)
    betas = np.asarray(betas, dtype=np.float64)
    if betas.size == 0:
        return np.ones_like(j)
    return 1.0 + sigmoid(j[:, None], alpha, betas[None, :]).sum(axis=1)


def junction_midpoints(lengths: Sequence[int]) -> np.ndarray:
    return np.cumsum(lengths)[:-1].astype(np.float64) + 0.5


def cutoff_tau(betas, alpha: float, lengths: Sequence[int], k: int, positions=None) -> np.ndarray:
    """Multi-sequence soft label: the sigmoid sum reset from k to 1 at each junction."""
    n = int(np.sum(lengths))
    tau = tau_from_betas(betas, alpha, n, positions)
    cuts = junction_midpoints(lengths)
    if cuts.size:
        j = _positions(n, positions)
        tau = tau + (1 - k) * sigmoid(j[:, None], alpha, cuts[None, :]).sum(axis=1)
    return tau


def dtau_dbeta(betas, alpha: float, positions) -> np.ndarray:
    """p x (k-1) matrix of -alpha s (1 - s); the cut-off sigmoids have no parameters."""
    j = np.asarray(positions, dtype=np.float64)
    s = sigmoid(j[:, None], alpha, np.asarray(betas, dtype=np.float64)[None, :])
    return -alpha * s * (1.0 - s)


def _clamped(tau, k: int) -> np.ndarray:
    tau = np.asarray(tau, dtype=np.float64)
    if tau.size and (tau.min() < 1 - TAU_TOL or tau.max() > k + TAU_TOL):
        bad = int(np.argmax((tau < 1 - TAU_TOL) | (tau > k + TAU_TOL)))
        raise NumericalError(
            f"tau[{bad}] = {tau[bad]!r} outside [1, {k}]; parametrization is broken",
            state={"index": bad, "tau": float(tau[bad])},
        )
    return np.clip(tau, 1.0, float(k))


def indicator_from_tau(tau, k: int) -> np.ndarray:
    """k x p tent-function relaxation G[i, j] = max(0, 1 - |tau_j - i|)."""
    tau = _clamped(tau, k)
    rows = np.arange(1, k + 1, dtype=np.float64)[:, None]
    return np.maximum(0.0, 1.0 - np.abs(tau[None, :] - rows))


def dindicator_dtau(tau, k: int) -> np.ndarray:
    """k x p derivative of G w.r.t. tau, using the closed case split.

    -1 where i <= tau_j <= i + 1, else +1 where i - 1 <= tau_j < i, else 0.
    At integer tau the first branch wins.
    """
    tau = _clamped(tau, k)[None, :]
    rows = np.arange(1, k + 1, dtype=np.float64)[:, None]
    down = (rows <= tau) & (tau <= rows + 1)
    up = ~down & (rows - 1 <= tau) & (tau < rows)
    return np.where(down, -1.0, np.where(up, 1.0, 0.0))


def sigmoid_chain(gamma, k: int, alpha: float, n: int, lengths: Optional[Sequence[int]] = None,
                  positions=None):
    """Evaluate (betas, tau, G) for single-sequence (``lengths`` None) or multi-sequence gamma."""
    if lengths is None:
        betas = betas_from_gamma(gamma, n)
        tau = tau_from_betas(betas, alpha, n, positions)
    else:
        betas = betas_from_gamma_multi(gamma, lengths)
        tau = cutoff_tau(betas, alpha, lengths, k, positions)
    return betas, tau, indicator_from_tau(tau, k)

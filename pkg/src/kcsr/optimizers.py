"""Full-batch gradient descent with Armijo backtracking, and minibatch SGD with momentum."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from kcsr.errors import InputError, NumericalError

log = logging.getLogger(__name__)

MAX_HALVINGS = 60
MIN_ITERS = 2000


@dataclass(frozen=True)
class GDConfig:
    """Gradient-descent settings.

    With ``unit_trial`` set, the first trial step of every line search has length
    ``initial_step`` in gamma-space (eta = initial_step / ||grad||) instead of
    eta = initial_step. The objective is rugged at the one-sample scale, and a
    step ladder anchored to the gradient norm would otherwise shrink with the
    gradient and leave the iterate trapped in the first shallow well.
    """

    epsilon: float = 1e-6
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    max_iters: int = 1000
    unit_trial: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")
        if not 0 < self.armijo_c < 1:
            raise InputError("armijo_c must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise InputError("backtrack must lie in (0, 1)")
        if not self.initial_step > 0:
            raise InputError("initial_step must be positive")
        if self.max_iters < 1:
            raise InputError("max_iters must be >= 1")


@dataclass(frozen=True)
class SGDConfig:
    """Minibatch SGD settings.

    ``iterations_T=None`` resolves to max(ceil(50 n / b), MIN_ITERS): at least fifty
    passes over the data, and enough updates for the decayed steps to settle on
    short sequences.
    ``eta0`` is the initial step measured in samples: the first update moves the
    midpoints by about ``eta0`` positions (see ``run_sgd``).
    ``rho=None`` picks the per-step decay that shrinks the step 100-fold over the run.
    """

    iterations_T: Optional[int] = None
    batch_b: int = 256
    eta0: float = 1.0
    rho: Optional[float] = None
    momentum_mu: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.iterations_T is not None and self.iterations_T < 1:
            raise InputError("iterations_T must be >= 1")
        if self.batch_b < 1:
            raise InputError("batch_b must be >= 1")
        if not self.eta0 > 0:
            raise InputError("eta0 must be positive")
        if self.rho is not None and not 0 < self.rho <= 1:
            raise InputError("rho must lie in (0, 1]")
        if not 0 <= self.momentum_mu < 1:
            raise InputError("momentum_mu must lie in [0, 1)")
        if self.seed < 0:
            raise InputError("seed must be unsigned")

    def iterations(self, n: int) -> int:
        return self.iterations_T or max(math.ceil(50 * n / self.batch_b), MIN_ITERS)

    def decay(self, n: int) -> float:
        if self.rho is not None:
            return self.rho
        return 0.01 ** (1.0 / self.iterations(n))


@dataclass
class OptResult:
    gamma_star: np.ndarray
    objective_trace: list[tuple[int, float]]
    converged: bool
    iterations_used: int
    full_trace: list[tuple[int, float]] = field(default_factory=list)
    stop_reason: str = ""


def _armijo(f: Callable, gamma, grad, f0: float, config: GDConfig) -> tuple[float, float]:
    g2 = float(grad @ grad)
    eta = config.initial_step
    if config.unit_trial:
        eta /= math.sqrt(g2)
    for _ in range(MAX_HALVINGS + 1):
        trial = f(gamma - eta * grad)
        if np.isfinite(trial) and trial <= f0 - config.armijo_c * eta * g2:
            return eta, trial
        last_eta, last_val = eta, trial
        eta *= config.backtrack
    return last_eta, last_val


def armijo_line_search(f: Callable, gamma, grad, config: GDConfig) -> float:
    """Largest eta0 * backtrack**m with f(gamma - eta grad) <= f(gamma) - c eta ||grad||^2.

    eta0 is ``initial_step``, divided by ||grad|| when ``config.unit_trial``.
    After MAX_HALVINGS reductions the smallest trial step is returned as is.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    return _armijo(f, gamma, grad, f(gamma), config)[0]


def run_gd(problem, gamma0, config: GDConfig = GDConfig()) -> OptResult:
    """Steepest descent until |J_{t+1} - J_t| <= epsilon or max_iters.

    ``problem`` needs ``value(gamma)`` and ``value_and_grad(gamma)`` (returning an
    object with ``value`` and ``grad_gamma``). If even the smallest trial step
    fails to decrease J the run stops in place, keeping the trace monotone; that
    counts as 'tolerance' when the rejected change was within epsilon anyway and
    as 'stalled' otherwise.
    """
    gamma = np.array(gamma0, dtype=np.float64)
    if not np.all(np.isfinite(gamma)):
        raise InputError("gamma0 must be finite")
    rep = problem.value_and_grad(gamma)
    J, grad = rep.value, rep.grad_gamma
    trace = [(0, J)]
    reason = "max_iters"
    it = 0
    for it in range(1, config.max_iters + 1):
        if not np.any(grad):
            reason = "stationary"
            break
        eta, J_new = _armijo(problem.value, gamma, grad, J, config)
        if not np.isfinite(J_new):
            raise NumericalError("objective became non-finite", state={"gamma": gamma, "iteration": it})
        if J_new > J:
            log.debug("line search stalled at iteration %d", it)
            reason = "tolerance" if J_new - J <= config.epsilon else "stalled"
            break
        gamma = gamma - eta * grad
        trace.append((it, J_new))
        if abs(J_new - J) <= config.epsilon:
            reason = "tolerance"
            break
        rep = problem.value_and_grad(gamma)
        J, grad = rep.value, rep.grad_gamma
        if not (np.isfinite(J) and np.all(np.isfinite(grad))):
            raise NumericalError("non-finite gradient", state={"gamma": gamma, "iteration": it})
    return OptResult(gamma, trace, reason != "max_iters", it, stop_reason=reason)


def run_sgd(problem, gamma0, n: int, config: SGDConfig = SGDConfig(),
            step_scale: float = 1.0, full_every: Optional[int] = None) -> OptResult:
    """Heavy-ball SGD on sorted random index subsets.

    delta_t = mu delta_{t-1} - eta_t grad_t,  gamma_t = gamma_{t-1} + delta_t,
    eta_t = eta0 * step_scale * rho**t. ``problem.minibatch(gamma, indices)``
    supplies the stochastic value and gradient; ``problem.full_value(gamma, tile)``
    is sampled every ``full_every`` steps when given.
    """
    b = config.batch_b
    if b > n:
        raise InputError(f"batch size {b} exceeds sequence length {n}")
    T = config.iterations(n)
    rho = config.decay(n)
    rng = np.random.default_rng(config.seed)
    gamma = np.array(gamma0, dtype=np.float64)
    delta = np.zeros_like(gamma)
    trace, full_trace = [], []
    for t in range(1, T + 1):
        eta = config.eta0 * step_scale * rho ** t
        idx = np.sort(rng.choice(n, size=b, replace=False))
        rep = problem.minibatch(gamma, idx)
        delta = config.momentum_mu * delta - eta * rep.grad_gamma
        new = gamma + delta
        if not np.all(np.isfinite(new)):
            raise NumericalError(
                f"non-finite update at t={t}",
                state={"t": t, "eta": eta, "grad_norm": float(np.linalg.norm(rep.grad_gamma)),
                       "gamma": gamma},
            )
        gamma = new
        trace.append((t, rep.value))
        if full_every and (t % full_every == 0 or t == T):
            full_trace.append((t, problem.full_value(gamma, b)))
    return OptResult(gamma, trace, True, T, full_trace, stop_reason="iterations")

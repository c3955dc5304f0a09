"""End-to-end KCSR (full batch), SKCSR (minibatch) and MKCSR (multi-sequence) pipelines."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from kcsr import kernels
from kcsr.data import DataSequence, concat_sequences
from kcsr.errors import InputError, ResourceError
from kcsr.kernels import KernelSpec
from kcsr.objective import FullBatchProblem, MinibatchProblem, ObjectiveParams, auto_lambda
from kcsr.optimizers import GDConfig, OptResult, SGDConfig, run_gd, run_sgd
from kcsr.sigmoid import betas_from_gamma, betas_from_gamma_multi, cutoff_tau, tau_from_betas

log = logging.getLogger(__name__)

DEFAULT_MEM_CAP = 2 * 1024**3
MEM_CAP_ENV = "KCSR_MEM_CAP_BYTES"
FULL_TRACE_MAX_N = 5000


def memory_cap() -> int:
    raw = os.environ.get(MEM_CAP_ENV)
    if raw is None:
        return DEFAULT_MEM_CAP
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{MEM_CAP_ENV} must be an integer byte count, got {raw!r}") from None


@dataclass(frozen=True)
class SegmentationRequest:
    """What to segment into and how.

    ``kernel=None`` means RBF with the median-heuristic width; ``lam=None`` means
    ``auto_lambda`` on the kernel the objective actually sees (n or b columns).
    """

    k: int
    kernel: Optional[KernelSpec] = None
    alpha: float = 10.0
    lam: Optional[float] = None
    method: str = "kcsr"
    gd: GDConfig = GDConfig()
    sgd: SGDConfig = SGDConfig()
    mem_cap_bytes: Optional[int] = None

    def __post_init__(self):
        if self.k < 1:
            raise InputError(f"k must be >= 1, got {self.k}")
        if not self.alpha > 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if self.lam is not None and self.lam < 0:
            raise InputError(f"lambda must be non-negative, got {self.lam}")
        if self.method not in ("kcsr", "skcsr", "mkcsr"):
            raise InputError(f"unknown method {self.method!r}")


@dataclass
class SegmentationResult:
    method: str
    k: int
    alpha: float
    lam: float
    kernel: KernelSpec
    betas: np.ndarray
    tau: np.ndarray
    labels: np.ndarray
    boundaries: np.ndarray
    objective_trace: list
    seed: Optional[int] = None
    block_lengths: Optional[list] = None
    gamma: Optional[np.ndarray] = None
    full_trace: list = field(default_factory=list)
    empty_segments: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def final_objective(self) -> float:
        return float(self.objective_trace[-1][1]) if self.objective_trace else float("nan")


def labels_from_tau(tau, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Hard labels round(tau) clamped to [1, k], exact halves rounding down.

    Boundaries are 1-based last indices of segments 1..k-1; an empty segment
    repeats the previous boundary.
    """
    tau = np.asarray(tau, dtype=np.float64)
    labels = np.clip(np.ceil(tau - 0.5), 1, k).astype(np.int64)
    boundaries = np.array([int(np.sum(labels <= i)) for i in range(1, k)], dtype=np.int64)
    return labels, boundaries


def _empty(labels: np.ndarray, k: int) -> list[int]:
    present = set(np.unique(labels).tolist())
    return [c for c in range(1, k + 1) if c not in present]


def _as_sequence(X) -> DataSequence:
    return X if isinstance(X, DataSequence) else DataSequence(np.asarray(X))


def _resolve_kernel(seq: DataSequence, spec: Optional[KernelSpec]) -> KernelSpec:
    if spec is not None:
        return spec
    sigma = kernels.median_heuristic_sigma(seq) if seq.n >= 2 else 1.0
    log.info("median-heuristic sigma = %.6g", sigma)
    return KernelSpec("rbf", sigma)


def _resolve_lambda(seq: DataSequence, spec: KernelSpec, k: int, p: int, lam: Optional[float]) -> float:
    if lam is not None:
        return float(lam)
    return auto_lambda(float(np.mean(kernels.kernel_diagonal(seq, spec))), k, p)


def _check_k(n: int, k: int) -> None:
    if k > n:
        raise InputError(f"k = {k} exceeds sequence length n = {n}")


def sgd_step_scale(k: int, span: int, n: int, b: int) -> float:
    """Map a step 'in samples' to a step on gamma.

    Near gamma = 0 the midpoint Jacobian has entries of order span / k, and a
    midpoint only receives gradient when a batch sample lands next to it, which
    happens in about b / n of the batches. The returned factor makes one unit of
    ``eta0`` move a midpoint by about one sample per step in expectation.
    """
    return float(k * k) / (max(span, 1) ** 2) * n / b


def _decode(method, request, spec, lam, tau, betas, opt: OptResult, k, seed=None,
            lengths=None) -> SegmentationResult:
    if lengths is None:
        labels, boundaries = labels_from_tau(tau, k)
        empty = _empty(labels, k)
    else:
        parts, bounds, empty = [], [], []
        offset = 0
        for n_p in lengths:
            lab, bnd = labels_from_tau(tau[offset:offset + n_p], k)
            parts.append(lab)
            bounds.append(bnd + offset)
            empty.extend(_empty(lab, k))
            offset += n_p
        labels, boundaries = np.concatenate(parts), np.concatenate(bounds)
    if empty:
        log.warning("empty decoded segments: %s", sorted(set(empty)))
    return SegmentationResult(
        method=method, k=k, alpha=request.alpha, lam=lam, kernel=spec,
        betas=betas, tau=tau, labels=labels, boundaries=boundaries,
        objective_trace=list(opt.objective_trace), seed=seed,
        block_lengths=None if lengths is None else list(lengths),
        gamma=opt.gamma_star, full_trace=list(opt.full_trace), empty_segments=empty,
        stop_reason=opt.stop_reason,
    )


def kcsr_segment(X, request: SegmentationRequest) -> SegmentationResult:
    """Full-kernel gradient descent from gamma = 0 (evenly spaced midpoints)."""
    seq = _as_sequence(X)
    n, k = seq.n, request.k
    _check_k(n, k)
    cap = request.mem_cap_bytes if request.mem_cap_bytes is not None else memory_cap()
    need = 8 * n * n
    if need > cap:
        raise ResourceError(
            f"a full {n}x{n} kernel needs {need / 2**30:.2f} GiB, over the "
            f"{cap / 2**30:.2f} GiB cap; use method 'skcsr' (minibatch) instead"
        )
    spec = _resolve_kernel(seq, request.kernel)
    lam = _resolve_lambda(seq, spec, k, n, request.lam)
    params = ObjectiveParams(lam, request.alpha, k, n)
    problem = FullBatchProblem(kernels.build_kernel_matrix(seq, spec), params)
    gamma0 = np.zeros(k)
    if k == 1:
        # Nothing to optimize: gamma has no effect on a single segment.
        opt = OptResult(gamma0, [(0, problem.value(gamma0))], True, 0, stop_reason="stationary")
    else:
        opt = run_gd(problem, gamma0, request.gd)
    betas = betas_from_gamma(opt.gamma_star, n)
    tau = tau_from_betas(betas, request.alpha, n)
    return _decode("kcsr", request, spec, lam, tau, betas, opt, k)


def skcsr_segment(X, request: SegmentationRequest) -> SegmentationResult:
    """Minibatch SGD; kernel storage never exceeds b x b."""
    seq = _as_sequence(X)
    n, k = seq.n, request.k
    _check_k(n, k)
    cfg = request.sgd
    if cfg.batch_b > n:
        raise InputError(f"batch size {cfg.batch_b} exceeds sequence length {n}")
    spec = _resolve_kernel(seq, request.kernel)
    lam = _resolve_lambda(seq, spec, k, cfg.batch_b, request.lam)
    params = ObjectiveParams(lam, request.alpha, k, n)
    problem = MinibatchProblem(seq, spec, params, full_lam=lam * cfg.batch_b / n)
    T = cfg.iterations(n)
    full_every = math.ceil(T / 20) if n <= FULL_TRACE_MAX_N else None
    opt = run_sgd(problem, np.zeros(k), n, cfg, sgd_step_scale(k, n - 1, n, cfg.batch_b), full_every)
    betas = betas_from_gamma(opt.gamma_star, n)
    tau = tau_from_betas(betas, request.alpha, n)
    return _decode("skcsr", request, spec, lam, tau, betas, opt, k, seed=cfg.seed)


def mkcsr_segment(sequences: Sequence, request: SegmentationRequest
                  ) -> tuple[list[SegmentationResult], SegmentationResult]:
    """Joint segmentation of m >= 2 sequences into k matched segments each.

    Segment c of every sequence carries class id c. Returns the per-sequence
    results and the global result over the concatenation.
    """
    blocks = [_as_sequence(s) for s in sequences]
    if len(blocks) < 2:
        raise InputError("mkcsr needs at least 2 sequences; use kcsr_segment for one")
    k = request.k
    for b in blocks:
        _check_k(b.n, k)
    multi = concat_sequences(blocks)
    seq, lengths = multi.combined, tuple(multi.lengths)
    n = seq.n
    cfg = request.sgd
    if cfg.batch_b > n:
        raise InputError(f"batch size {cfg.batch_b} exceeds total length {n}")
    spec = _resolve_kernel(seq, request.kernel)
    lam = _resolve_lambda(seq, spec, k, cfg.batch_b, request.lam)
    params = ObjectiveParams(lam, request.alpha, k, n, lengths=lengths)
    problem = MinibatchProblem(seq, spec, params, full_lam=lam * cfg.batch_b / n)
    T = cfg.iterations(n)
    full_every = math.ceil(T / 20) if n <= FULL_TRACE_MAX_N else None
    span = int(np.mean(lengths)) - 1
    opt = run_sgd(problem, np.zeros(k * len(lengths)), n, cfg,
                  sgd_step_scale(k, span, n, cfg.batch_b), full_every)
    betas = betas_from_gamma_multi(opt.gamma_star, lengths)
    tau = cutoff_tau(betas, request.alpha, lengths, k)
    glob = _decode("mkcsr", request, spec, lam, tau, betas, opt, k, seed=cfg.seed, lengths=lengths)
    per_seq = []
    offset = 0
    for p, n_p in enumerate(lengths):
        sl = slice(offset, offset + n_p)
        bsl = slice(p * (k - 1), (p + 1) * (k - 1))
        lab = glob.labels[sl]
        per_seq.append(replace(
            glob, betas=glob.betas[bsl] - offset, tau=glob.tau[sl], labels=lab,
            boundaries=glob.boundaries[bsl] - offset, block_lengths=None,
            empty_segments=_empty(lab, k),
        ))
        offset += n_p
    return per_seq, glob

"""Kernel values, full Gram matrices and index-restricted (partial) Gram matrices.

Squared distances are computed pairwise (``cdist``), so an entry depends only on
its two samples: a partial matrix is bit-identical to the same slice of the full
matrix, and the full matrix is exactly symmetric.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist

from kcsr.errors import InputError, ResourceError

KINDS = ("rbf", "linear")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "rbf" and not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise InputError(f"rbf kernel needs sigma > 0, got {self.sigma}")


@dataclass(frozen=True)
class KernelMatrix:
    values: np.ndarray
    source_indices: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.values))


# Allocation instrumentation: every kernel block built by this module reports its
# shape to the active trackers. Used to check the O(b^2) memory contract of SGD.
_trackers: list[list[tuple[int, int]]] = []


@contextlib.contextmanager
def track_kernel_allocations() -> Iterator[list[tuple[int, int]]]:
    """Collect the shape of every kernel block built inside the ``with`` body."""
    shapes: list[tuple[int, int]] = []
    _trackers.append(shapes)
    try:
        yield shapes
    finally:
        _trackers.remove(shapes)


def _report(shape: tuple[int, int]) -> None:
    for shapes in _trackers:
        shapes.append(shape)


def _as_samples(X) -> np.ndarray:
    samples = getattr(X, "samples", X)
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    return samples


def rbf_kernel(x, y, sigma: float) -> float:
    """exp(-||x - y||^2 / (2 sigma^2)) for two feature vectors."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not sigma > 0:
        raise InputError(f"sigma must be positive, got {sigma}")
    d2 = float(np.sum((x - y) ** 2))
    return float(np.exp(-d2 / (2.0 * sigma * sigma)))


def _block(A: np.ndarray, B: np.ndarray, spec: KernelSpec) -> np.ndarray:
    _report((A.shape[0], B.shape[0]))
    try:
        if spec.kind == "linear":
            # Row-by-row dot products keep entries independent of block layout.
            out = np.einsum("id,jd->ij", A, B)
        else:
            out = cdist(A, B, "sqeuclidean")
            out *= -1.0 / (2.0 * spec.sigma * spec.sigma)
            np.exp(out, out=out)
    except MemoryError as exc:
        raise ResourceError(
            f"cannot allocate a {A.shape[0]}x{B.shape[0]} kernel block"
        ) from exc
    return out


def build_kernel_matrix(X, spec: KernelSpec) -> KernelMatrix:
    samples = _as_samples(X)
    if samples.shape[0] < 1:
        raise InputError("empty sequence")
    values = _block(samples, samples, spec)
    values.setflags(write=False)
    return KernelMatrix(values)


def _check_indices(indices, n: int) -> np.ndarray:
    idx = np.asarray(indices)
    if idx.ndim != 1 or idx.size == 0:
        raise InputError("indices must be a non-empty 1-d list")
    if not np.issubdtype(idx.dtype, np.integer):
        raise InputError("indices must be integers")
    if idx[0] < 0 or idx[-1] >= n:
        raise InputError(f"indices out of range [0, {n - 1}]")
    if np.any(np.diff(idx) <= 0):
        raise InputError("indices must be strictly increasing (no duplicates)")
    return idx.astype(np.intp)


def build_partial_kernel(X, indices, spec: KernelSpec) -> KernelMatrix:
    """Gram matrix of the samples at the given 0-based, strictly increasing positions."""
    samples = _as_samples(X)
    idx = _check_indices(indices, samples.shape[0])
    sub = samples[idx]
    values = _block(sub, sub, spec)
    values.setflags(write=False)
    return KernelMatrix(values, source_indices=idx)


def build_cross_kernel(X, rows, cols, spec: KernelSpec) -> np.ndarray:
    """Rectangular kernel block between two index sets (tiled full-objective evaluation)."""
    samples = _as_samples(X)
    return _block(samples[np.asarray(rows)], samples[np.asarray(cols)], spec)


def kernel_diagonal(X, spec: KernelSpec) -> np.ndarray:
    samples = _as_samples(X)
    if spec.kind == "rbf":
        return np.ones(samples.shape[0])
    return np.einsum("id,id->i", samples, samples)


def median_heuristic_sigma(X, sample_cap: int = 1000) -> float:
    """Median pairwise distance over up to ``sample_cap`` evenly spaced samples.

    Falls back to 1.0 when the median distance is zero.
    """
    samples = _as_samples(X)
    n = samples.shape[0]
    if n < 2:
        raise InputError("median heuristic needs at least 2 samples")
    if sample_cap < 2:
        raise InputError("sample_cap must be at least 2")
    m = min(n, sample_cap)
    idx = np.unique(np.linspace(0, n - 1, m).round().astype(np.intp))
    med = float(np.median(pdist(samples[idx])))
    return med if med > 0 else 1.0

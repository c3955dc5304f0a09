"""Exact kernel segmentation by dynamic programming (small-instance oracle).

Segments are addressed 1-based and inclusive, matching the boundary convention
used throughout: a boundary b means the segment ends at sample b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kcsr.errors import InputError
from kcsr.kernels import KernelMatrix

DEFAULT_CAP = 2000


class ScatterTable:
    """O(1) within-segment scatter from prefix sums of diag(K) and of K."""

    def __init__(self, K):
        Kv = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=np.float64)
        n = Kv.shape[0]
        self.n = n
        self.diag = np.concatenate(([0.0], np.cumsum(np.diag(Kv))))
        S = np.zeros((n + 1, n + 1))
        S[1:, 1:] = np.cumsum(np.cumsum(Kv, axis=0), axis=1)
        self.block = S

    def __call__(self, s, e):
        """Scatter of samples s..e (1-based, inclusive); ``s`` may be an array."""
        S = self.block
        s0 = np.asarray(s) - 1
        inner = S[e, e] - S[s0, e] - S[e, s0] + S[s0, s0]
        return self.diag[e] - self.diag[s0] - inner / (e - s0)


def segment_scatter(K, s: int, e: int) -> float:
    n = K.size if isinstance(K, KernelMatrix) else np.asarray(K).shape[0]
    if s > e:
        raise InputError(f"empty segment: start {s} > end {e}")
    if s < 1 or e > n:
        raise InputError(f"segment [{s}, {e}] outside [1, {n}]")
    return float(ScatterTable(K)(s, e))


@dataclass(frozen=True)
class DPSolution:
    boundaries: np.ndarray
    optimal_cost: float
    cost_table: np.ndarray


def dp_segment(K, k: int, cap: int = DEFAULT_CAP) -> DPSolution:
    """Minimum total scatter over all partitions into k contiguous segments.

    ``cost_table[c, e-1]`` is the best cost of splitting samples 1..e into c+1
    segments. Ties go to the smallest boundary index.
    """
    table = ScatterTable(K)
    n = table.n
    if n > cap:
        raise InputError(f"n = {n} exceeds the DP oracle cap of {cap}")
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k = {k}, n = {n}")
    cost = np.full((k, n + 1), np.inf)
    arg = np.zeros((k, n + 1), dtype=np.int64)
    ends = np.arange(1, n + 1)
    cost[0, 1:] = table(np.ones(n, dtype=np.int64), ends)
    for c in range(1, k):
        for e in range(c + 1, n + 1):
            t = np.arange(c, e)  # last sample of the previous segment
            cand = cost[c - 1, t] + table(t + 1, e)
            best = int(np.argmin(cand))
            cost[c, e] = cand[best]
            arg[c, e] = t[best]
    bounds = []
    e = n
    for c in range(k - 1, 0, -1):
        e = int(arg[c, e])
        bounds.append(e)
    return DPSolution(np.array(bounds[::-1], dtype=np.int64), float(max(cost[k - 1, n], 0.0)), cost[:, 1:])

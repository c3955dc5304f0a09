"""Permutation-matched accuracy and max-normalized mutual information."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from kcsr.errors import InputError


def _pad_square(profit) -> np.ndarray:
    P = np.asarray(profit, dtype=np.float64)
    if P.ndim != 2:
        raise InputError("profit must be a 2-d matrix")
    size = max(P.shape)
    out = np.zeros((size, size))
    out[: P.shape[0], : P.shape[1]] = P
    return out


def _best_total(P: np.ndarray) -> float:
    if P.size == 0:
        return 0.0
    r, c = linear_sum_assignment(P, maximize=True)
    return float(P[r, c].sum())


def hungarian(profit) -> np.ndarray:
    """Column assigned to each row, maximizing total profit.

    Rectangular input is zero-padded to square. Among optimal assignments the
    lexicographically smallest one is returned: rows are fixed in order, each to
    the lowest column that still admits an optimal completion.
    """
    P = _pad_square(profit)
    size = P.shape[0]
    best = _best_total(P)
    tol = 1e-9 * max(1.0, np.abs(P).max(initial=0.0))
    assign = np.empty(size, dtype=np.int64)
    free_cols = list(range(size))
    fixed = 0.0
    for row in range(size):
        for col in free_cols:
            rest_rows = np.arange(row + 1, size)
            rest_cols = [c for c in free_cols if c != col]
            total = fixed + P[row, col] + _best_total(P[np.ix_(rest_rows, rest_cols)])
            if total >= best - tol:
                assign[row] = col
                fixed += P[row, col]
                free_cols.remove(col)
                break
    return assign


def _labels(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise InputError(f"label vectors differ in length: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise InputError("label vectors are empty")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    """counts[a, b] = #samples with the a-th distinct predicted and b-th distinct true label."""
    pred, truth = _labels(pred, truth)
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    counts = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(counts, (p, t), 1)
    return counts


def accuracy(pred, truth) -> float:
    C = contingency(pred, truth)
    assign = hungarian(C)
    P = _pad_square(C)
    return float(P[np.arange(P.shape[0]), assign].sum() / C.sum())


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def nmi(pred, truth) -> float:
    """MI / max(H(truth), H(pred)), base-2 logs.

    Two single-cluster partitions give 1.0; exactly one single-cluster side gives 0.0.
    """
    C = contingency(pred, truth).astype(np.float64)
    joint = C / C.sum()
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    ha, hb = _entropy(pa), _entropy(pb)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log2(joint[nz] / np.outer(pa, pb)[nz])))
    return float(min(1.0, max(0.0, mi / max(ha, hb))))

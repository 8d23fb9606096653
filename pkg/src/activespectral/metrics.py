"""Clustering quality against ground truth: Jaccard Coefficient and V-measure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass
class PairCounts:
    """Co-membership counts over all unordered sample pairs.

    ss: same cluster in both partitions; sd: same in prediction only;
    ds: same in truth only; dd: different in both.
    """

    ss: int
    sd: int
    ds: int
    dd: int

    @property
    def total(self) -> int:
        return self.ss + self.sd + self.ds + self.dd


def _as_labels(x) -> np.ndarray:
    arr = np.asarray(getattr(x, "labels", x))
    if arr.ndim != 1:
        raise ShapeError(f"label vector must be 1-D, got shape {arr.shape}")
    return arr


def contingency_table(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Counts a[q, p] of samples in truth class q and predicted cluster p."""
    _, t_idx = np.unique(truth, return_inverse=True)
    _, p_idx = np.unique(pred, return_inverse=True)
    table = np.zeros((t_idx.max() + 1, p_idx.max() + 1), dtype=np.int64)
    np.add.at(table, (t_idx, p_idx), 1)
    return table


def pair_counts(pred, truth) -> PairCounts:
    pred = _as_labels(pred)
    truth = _as_labels(truth)
    if pred.shape != truth.shape:
        raise ShapeError(f"length mismatch: {pred.shape} vs {truth.shape}")
    n = pred.shape[0]
    if n < 2:
        raise ShapeError("pair counts need at least 2 samples")
    table = contingency_table(pred, truth)

    def pairs(counts) -> int:
        counts = np.asarray(counts, dtype=np.int64)
        return int((counts * (counts - 1) // 2).sum())

    ss = pairs(table.ravel())
    same_pred = pairs(table.sum(axis=0))
    same_truth = pairs(table.sum(axis=1))
    total = n * (n - 1) // 2
    sd = same_pred - ss
    ds = same_truth - ss
    dd = total - ss - sd - ds
    counts = PairCounts(ss=ss, sd=sd, ds=ds, dd=dd)
    assert counts.total == total
    return counts


def jaccard(pred, truth) -> float:
    """SS / (SS + SD + DS) over sample pairs.

    When all three counts are zero (both partitions all-singletons) the
    partitions are identical and the score is defined as 1.0.
    """
    c = pair_counts(pred, truth)
    denom = c.ss + c.sd + c.ds
    if denom == 0:
        return 1.0
    return c.ss / denom


def _entropy_from_counts(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def _conditional_entropy(table: np.ndarray, n: int) -> float:
    """H(row | column) with 0 log 0 = 0, natural log."""
    h = 0.0
    for col in table.T:
        col_total = col.sum()
        if col_total == 0:
            continue
        nz = col[col > 0]
        h -= float((nz / n * np.log(nz / col_total)).sum())
    return h


def v_measure(pred, truth, beta: float = 1.0) -> tuple[float, float, float]:
    """(V, homogeneity, completeness), natural logs, harmonic mean at beta.

    homogeneity is 1 when the truth partition carries no entropy (nothing to
    explain); completeness is the symmetric statement for the prediction.
    """
    pred = _as_labels(pred)
    truth = _as_labels(truth)
    if pred.shape != truth.shape:
        raise ShapeError(f"length mismatch: {pred.shape} vs {truth.shape}")
    n = pred.shape[0]
    table = contingency_table(pred, truth)  # rows: truth classes, cols: clusters

    h_c = _entropy_from_counts(table.sum(axis=1), n)
    h_k = _entropy_from_counts(table.sum(axis=0), n)
    h_c_given_k = _conditional_entropy(table, n)
    h_k_given_c = _conditional_entropy(table.T, n)

    homogeneity = 1.0 if h_c == 0.0 else 1.0 - h_c_given_k / h_c
    completeness = 1.0 if h_k == 0.0 else 1.0 - h_k_given_c / h_k
    denom = beta * homogeneity + completeness
    v = 0.0 if denom == 0.0 else (1.0 + beta) * homogeneity * completeness / denom
    return v, homogeneity, completeness

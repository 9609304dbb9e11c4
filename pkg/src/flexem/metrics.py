"""Clustering-quality and estimation-error metrics.

Adjusted Rand index, adjusted mutual information with the exact
hypergeometric expected-MI term, assignment-based accuracy, and the
parameter-error measures used by the benchmark harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaln

from .elliptic import NOISE, MixtureModel


@dataclass
class ContingencyTable:
    counts: np.ndarray   # (K_a, K_b) nonnegative ints
    n: int

    @classmethod
    def from_labels(cls, a, b) -> "ContingencyTable":
        a = np.asarray(a)
        b = np.asarray(b)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("label arrays must be 1-d and of equal length")
        _, ai = np.unique(a, return_inverse=True)
        _, bi = np.unique(b, return_inverse=True)
        ka, kb = ai.max() + 1, bi.max() + 1
        counts = np.zeros((ka, kb), dtype=np.int64)
        np.add.at(counts, (ai, bi), 1)
        return cls(counts=counts, n=int(a.shape[0]))


def _drop_noise(a: np.ndarray, b: np.ndarray, noise_label: int) -> tuple[np.ndarray, np.ndarray]:
    keep = (a != noise_label) & (b != noise_label)
    return a[keep], b[keep]


def _comb2(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.float64)
    return x * (x - 1.0) / 2.0


def ari(a, b, exclude_noise: bool = False, noise_label: int = NOISE) -> float:
    """Hubert-Arabie adjusted Rand index between two label vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("label arrays must have equal length")
    if exclude_noise:
        a, b = _drop_noise(a, b, noise_label)
    table = ContingencyTable.from_labels(a, b)
    nij = table.counts
    n = table.n
    sum_ij = _comb2(nij).sum()
    sum_a = _comb2(nij.sum(axis=1)).sum()
    sum_b = _comb2(nij.sum(axis=0)).sum()
    total = _comb2(np.array([n]))[0]
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both partitions trivial (all-singletons or single block): identical
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def _mutual_information(table: ContingencyTable) -> float:
    nij = table.counts
    n = table.n
    outer = np.outer(nij.sum(axis=1), nij.sum(axis=0)).astype(np.float64)
    nz = nij > 0
    terms = nij[nz] / n * (np.log(nij[nz] * float(n)) - np.log(outer[nz]))
    return float(terms.sum())


def expected_mutual_information(table: ContingencyTable) -> float:
    """Exact E[MI] under the hypergeometric permutation model (natural logs)."""
    a = table.counts.sum(axis=1)
    b = table.counts.sum(axis=0)
    n = table.n
    log_fact_n = gammaln(n + 1)
    emi = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1)
            log_term = (
                gammaln(ai + 1) + gammaln(bj + 1)
                + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                - log_fact_n - gammaln(nij + 1)
                - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                - gammaln(n - ai - bj + nij + 1)
            )
            mi_term = nij / n * (np.log(nij) + np.log(n) - np.log(ai) - np.log(bj))
            emi += float((mi_term * np.exp(log_term)).sum())
    return emi


def ami(a, b, average_method: str = "arithmetic",
        exclude_noise: bool = False, noise_label: int = NOISE) -> float:
    """Adjusted mutual information, (MI - E[MI]) / (norm(H) - E[MI]).

    The normaliser is the arithmetic mean of the two entropies by default;
    ``average_method="max"`` uses their maximum.  A degenerate pair of
    single-class partitions scores 1.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("label arrays must have equal length")
    if exclude_noise:
        a, b = _drop_noise(a, b, noise_label)
    table = ContingencyTable.from_labels(a, b)
    h_a = _entropy(table.counts.sum(axis=1), table.n)
    h_b = _entropy(table.counts.sum(axis=0), table.n)
    mi = _mutual_information(table)
    emi = expected_mutual_information(table)
    if average_method == "arithmetic":
        norm = 0.5 * (h_a + h_b)
    elif average_method == "max":
        norm = max(h_a, h_b)
    else:
        raise ValueError("average_method must be 'arithmetic' or 'max'")
    denom = norm - emi
    if abs(denom) < 1e-15:
        # single-class vs single-class: identical partitions by construction
        return 1.0 if table.counts.shape == (1, 1) else 0.0
    return float((mi - emi) / denom)


def accuracy(pred, truth, exclude_noise: bool = False,
             noise_label: int = NOISE) -> float:
    """Best label-matching classification rate via optimal assignment."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("label arrays must have equal length")
    if exclude_noise:
        pred, truth = _drop_noise(pred, truth, noise_label)
    table = ContingencyTable.from_labels(pred, truth)
    rows, cols = linear_sum_assignment(table.counts, maximize=True)
    return float(table.counts[rows, cols].sum() / table.n)


def mu_error(mu_true, mu_hat) -> float:
    """l2 norm of the mean-estimation error."""
    mu_true = np.asarray(mu_true, dtype=float)
    mu_hat = np.asarray(mu_hat, dtype=float)
    if mu_true.shape != mu_hat.shape:
        raise ValueError("mean vectors must have equal dimension")
    return float(np.linalg.norm(mu_true - mu_hat))


def sigma_error(sigma_true, sigma_hat) -> float:
    """Trace-matched scatter error: ||Sigma - Sigma_hat tr(Sigma)/tr(Sigma_hat)||_F / m."""
    sigma_true = np.asarray(sigma_true, dtype=float)
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    if sigma_true.shape != sigma_hat.shape:
        raise ValueError("scatter matrices must have equal shape")
    m = sigma_true.shape[0]
    tr_hat = float(np.trace(sigma_hat))
    if tr_hat == 0.0:
        raise ValueError("estimated scatter has zero trace")
    scaled = sigma_hat * (np.trace(sigma_true) / tr_hat)
    return float(np.sqrt(((sigma_true - scaled) ** 2).sum() / m**2))


def match_clusters(truth: MixtureModel | None, est: MixtureModel | None,
                   truth_labels, est_labels) -> np.ndarray:
    """Permutation aligning estimated clusters to true ones.

    Returns ``perm`` with ``perm[t] = j`` meaning estimated cluster ``j``
    corresponds to true cluster ``t``, chosen to maximise label agreement
    on the confusion matrix.  Noise rows are ignored.
    """
    truth_labels = np.asarray(truth_labels)
    est_labels = np.asarray(est_labels)
    if truth is not None and est is not None:
        if truth.n_clusters != est.n_clusters:
            raise ValueError("mixture models must have the same number of clusters")
        k = truth.n_clusters
    else:
        k = int(max(truth_labels.max(), est_labels.max())) + 1
    keep = truth_labels != NOISE
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (truth_labels[keep], est_labels[keep]), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    perm = np.empty(k, dtype=int)
    perm[rows] = cols
    return perm

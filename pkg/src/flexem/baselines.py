"""Baseline algorithms: seeded k-means (also the EM initialiser) and a
classical Gaussian-mixture EM with full covariances."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .elliptic import Gaussian, MixtureModel
from .estimators import chol_quadforms, estimate_tau
from .fem import FitConfig, FitReport, _init_model, _rel_change


@dataclass
class KMeansResult:
    centers: np.ndarray        # (K, m)
    labels: np.ndarray         # (n,)
    inertia: float
    inertia_trace: list[float]


def _kmeans_pp_centers(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = X[rng.integers(n)]
        else:
            centers[j] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _assign(X: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(X.shape[0]), labels]


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iters: int
           ) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    k = centers.shape[0]
    labels = np.full(X.shape[0], -1)
    trace: list[float] = []
    for _ in range(max_iters):
        new_labels, d2 = _assign(X, centers)
        for j in range(k):
            mask = new_labels == j
            if mask.any():
                centers[j] = X[mask].mean(axis=0)
            else:
                # revive an empty cluster at the worst-fitted point
                far = int(np.argmax(d2))
                centers[j] = X[far]
                new_labels[far] = j
        _, d2 = _assign(X, centers)
        trace.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    labels, d2 = _assign(X, centers)
    return centers, labels, float(d2.sum()), trace


def kmeans(X, k: int, seed: int = 0, restarts: int = 10,
           max_iters: int = 300) -> KMeansResult:
    """Lloyd iterations with k-means++ seeding, best of `restarts` runs.

    If the winning run leaves singleton clusters, k-means is rerun without
    those points (at most three rounds) and the isolated points are put
    back by nearest-centre assignment.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < k:
        raise ValueError(f"need at least k={k} observations, got {n}")
    rng = np.random.default_rng(seed)

    def best_run(data: np.ndarray) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
        best = None
        for _ in range(restarts):
            centers = _kmeans_pp_centers(data, k, rng)
            centers, labels, inertia, trace = _lloyd(data, centers.copy(), max_iters)
            if best is None or inertia < best[2]:
                best = (centers, labels, inertia, trace)
        return best

    active = np.arange(n)
    centers = labels = trace = None
    inertia = np.inf
    for _ in range(3):
        centers, sub_labels, inertia, trace = best_run(X[active])
        counts = np.bincount(sub_labels, minlength=k)
        singles = np.where(counts <= 1)[0]
        if singles.size == 0 or active.size - counts[singles].sum() < k:
            break
        keep = ~np.isin(sub_labels, singles)
        active = active[keep]
    labels, d2 = _assign(X, centers)
    return KMeansResult(centers=centers, labels=labels,
                        inertia=float(d2.sum()), inertia_trace=trace)


def _gaussian_log_density(X: np.ndarray, model: MixtureModel) -> np.ndarray:
    n, m = X.shape
    out = np.empty((n, model.n_clusters))
    for j in range(model.n_clusters):
        chol = np.linalg.cholesky(model.sigma[j])
        q = chol_quadforms(X, model.mu[j], chol)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out[:, j] = -0.5 * (m * np.log(2.0 * np.pi) + logdet + q)
    return out


def _regularize(sigma: np.ndarray) -> np.ndarray:
    m = sigma.shape[0]
    try:
        np.linalg.cholesky(sigma)
        return sigma
    except np.linalg.LinAlgError:
        tr = max(float(np.trace(sigma)), 1e-300)
        return sigma + 1e-9 * (tr / m) * np.eye(m)


def gmm_em(X, k: int, cfg: FitConfig | None = None) -> FitReport:
    """Classical EM for a Gaussian mixture with full covariance matrices.

    Shares the k-means initialisation and the stopping rule with the
    flexible-EM driver so that benchmark comparisons are like for like.
    The observed log-likelihood is recorded every iteration.
    """
    cfg = cfg or FitConfig()
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    model = _init_model(X, k, cfg)

    loglik_trace: list[float] = []
    converged = False
    em_iters = 0
    for it in range(1, cfg.em_max_iters + 1):
        log_dens = np.log(model.pi)[None, :] + _gaussian_log_density(X, model)
        norm = logsumexp(log_dens, axis=1, keepdims=True)
        P = np.exp(log_dens - norm)

        ll = float(norm.sum())
        if loglik_trace:
            prev = loglik_trace[-1]
            if ll < prev - 1e-8 * abs(prev):
                warnings.warn(
                    f"GMM log-likelihood decreased at iteration {it}: "
                    f"{prev:.10g} -> {ll:.10g}",
                    stacklevel=2,
                )
        loglik_trace.append(ll)

        weights = P.sum(axis=0)
        pi = weights / n
        mu = (P.T @ X) / weights[:, None]
        sigma = np.empty_like(model.sigma)
        for j in range(k):
            d = X - mu[j]
            s = (d * P[:, j, None]).T @ d / weights[j]
            sigma[j] = _regularize(0.5 * (s + s.T))
        new_model = MixtureModel(pi, mu, sigma)

        delta = _rel_change(model, new_model)
        model = new_model
        em_iters = it
        if delta < cfg.em_tol:
            converged = True
            break

    log_dens = np.log(model.pi)[None, :] + _gaussian_log_density(X, model)
    labels = np.argmax(log_dens, axis=1)
    tau = estimate_tau(X, model, Gaussian())
    return FitReport(
        labels=labels,
        model=model,
        tau=tau,
        loglik_trace=loglik_trace,
        em_iters=em_iters,
        converged=converged,
        per_cluster_fp_iters=[],
        fp_converged=[],
        algorithm="gmm",
    )

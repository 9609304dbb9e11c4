"""Robust parameter estimation.

Per-observation scale estimates, the coupled fixed-point equations for the
cluster mean and scatter matrix (four update variants), and a reference
Tyler estimator used as an oracle in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .elliptic import DensityGenerator, MixtureModel

TAU_FLOOR = 1e-12


class DegenerateClusterError(RuntimeError):
    """Raised when a weighted scatter update loses rank."""

    def __init__(self, message: str = "degenerate cluster", cluster: int | None = None):
        super().__init__(message)
        self.cluster = cluster


@dataclass(frozen=True)
class FixedPointConfig:
    """Controls for the inner mean/scatter fixed-point loop.

    version 1: mean update with 1/quadform weights, scatter uses the
               same-iteration mean.
    version 2: as 1 but the scatter uses the previous-iteration mean.
    version 3: mean weights use 1/sqrt(quadform) (Tyler-style acceleration),
               scatter uses the previous-iteration mean.
    version 4: accelerated mean weights and same-iteration mean in the
               scatter update.
    """

    version: int = 1
    max_iters: int = 20
    tol: float = 1e-6
    tau_floor: float = TAU_FLOOR

    def __post_init__(self):
        if self.version not in (1, 2, 3, 4):
            raise ValueError("version must be 1..4")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


class FixedPointResult(NamedTuple):
    mu: np.ndarray
    sigma: np.ndarray
    iters: int
    converged: bool


def mahalanobis_sq(x, mu, sigma_inv) -> float:
    """(x - mu)^T Sigma^{-1} (x - mu)."""
    d = np.asarray(x, dtype=float) - np.asarray(mu, dtype=float)
    sigma_inv = np.asarray(sigma_inv, dtype=float)
    if sigma_inv.shape != (d.shape[0], d.shape[0]):
        raise ValueError("dimension mismatch between vector and matrix")
    return float(d @ sigma_inv @ d)


def chol_quadforms(X: np.ndarray, mu: np.ndarray, chol: np.ndarray) -> np.ndarray:
    """Quadratic forms (x_i - mu)^T Sigma^{-1} (x_i - mu) via L with LL^T = Sigma."""
    z = solve_triangular(chol, (X - mu).T, lower=True, check_finite=False)
    return np.einsum("ji,ji->i", z, z)


def _cholesky(sigma: np.ndarray, cluster: int | None = None) -> np.ndarray:
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise DegenerateClusterError(cluster=cluster) from None


def estimate_tau(X, model: MixtureModel,
                 gens: DensityGenerator | Sequence[DensityGenerator],
                 tau_floor: float = TAU_FLOOR) -> np.ndarray:
    """Scale estimates tau_ik = quadform_ik / argsup(t^{m/2} g_k(t)).

    `gens` is one generator shared by all clusters or a sequence of K
    per-cluster generators.  Entries are floored at `tau_floor`.
    """
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    k = model.n_clusters
    if isinstance(gens, DensityGenerator):
        gens = [gens] * k
    if len(gens) != k:
        raise ValueError("need one density generator per cluster")
    tau = np.empty((n, k))
    for j in range(k):
        chol = _cholesky(model.sigma[j], cluster=j)
        q = chol_quadforms(X, model.mu[j], chol)
        tau[:, j] = q / gens[j].argsup(m)
    return np.maximum(tau, tau_floor)


def update_pi(P: np.ndarray) -> np.ndarray:
    """Mixing proportions as column means of the responsibility matrix."""
    P = np.asarray(P, dtype=float)
    return P.mean(axis=0)


def fixed_point_mu_sigma(X, p_col, mu0, sigma0, cfg: FixedPointConfig | None = None,
                         fix_mu: bool = False) -> FixedPointResult:
    """Solve the coupled mean/scatter fixed-point system for one cluster.

    Iterates the responsibility-weighted mean and scatter updates (variant
    selected by ``cfg.version``), renormalising the scatter trace to m after
    every pass, until the combined l2/Frobenius change drops below
    ``cfg.tol`` or ``cfg.max_iters`` is reached.  With ``fix_mu`` the mean
    stays at ``mu0`` and only the scatter iterates (Tyler reduction).
    """
    cfg = cfg or FixedPointConfig()
    X = np.asarray(X, dtype=float)
    p = np.asarray(p_col, dtype=float)
    n, m = X.shape
    total = p.sum()
    if not total > 0:
        raise DegenerateClusterError("cluster has zero total responsibility")
    w = p / total

    mu = np.asarray(mu0, dtype=float).copy()
    sigma = np.asarray(sigma0, dtype=float).copy()
    sigma *= m / np.trace(sigma)

    sqrt_weights = cfg.version in (3, 4)
    same_iter_mu = cfg.version in (1, 4)

    iters = 0
    converged = False
    for iters in range(1, cfg.max_iters + 1):
        chol = _cholesky(sigma)
        q = np.maximum(chol_quadforms(X, mu, chol), cfg.tau_floor)

        if fix_mu:
            mu_new = mu
        else:
            wm = w / np.sqrt(q) if sqrt_weights else w / q
            mu_new = (wm @ X) / wm.sum()

        if same_iter_mu and not fix_mu:
            qs = np.maximum(chol_quadforms(X, mu_new, chol), cfg.tau_floor)
            d = X - mu_new
        else:
            qs = q
            d = X - mu
        sigma_new = m * (d * (w / qs)[:, None]).T @ d
        sigma_new = 0.5 * (sigma_new + sigma_new.T)
        trace = np.trace(sigma_new)
        if not np.isfinite(trace) or trace <= 0:
            raise DegenerateClusterError()
        sigma_new *= m / trace

        delta = np.linalg.norm(mu_new - mu) + np.linalg.norm(sigma_new - sigma, "fro")
        mu, sigma = mu_new, sigma_new
        if delta < cfg.tol:
            converged = True
            break

    _cholesky(sigma)
    return FixedPointResult(mu=mu, sigma=sigma, iters=iters, converged=converged)


def tyler_estimator(X, mu, iters: int = 100, tol: float = 1e-10) -> np.ndarray:
    """Known-location Tyler scatter estimator, trace normalised to m.

    Reference implementation used as an independent oracle for the
    uniform-responsibility reduction of the fixed-point system.
    """
    X = np.asarray(X, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n, m = X.shape
    if n <= m:
        raise ValueError("Tyler estimator needs n > m")
    d = X - mu
    sigma = np.eye(m)
    for _ in range(iters):
        chol = _cholesky(sigma)
        q = np.maximum(chol_quadforms(X, mu, chol), TAU_FLOOR)
        sigma_new = (m / n) * (d / q[:, None]).T @ d
        sigma_new = 0.5 * (sigma_new + sigma_new.T)
        trace = np.trace(sigma_new)
        if not np.isfinite(trace) or trace <= 0:
            raise DegenerateClusterError()
        sigma_new *= m / trace
        delta = np.linalg.norm(sigma_new - sigma, "fro")
        sigma = sigma_new
        if delta < tol:
            break
    _cholesky(sigma)
    return sigma

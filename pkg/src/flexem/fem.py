"""Flexible EM driver.

E-step, M-step orchestration, k-means initialisation, likelihood
monitoring and the Student-t per-cluster E-step variant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .elliptic import DensityGenerator, Gaussian, MixtureModel, StudentT
from .estimators import (
    TAU_FLOOR,
    DegenerateClusterError,
    FixedPointConfig,
    FixedPointResult,
    chol_quadforms,
    estimate_tau,
    fixed_point_mu_sigma,
    update_pi,
)

__all__ = [
    "MixtureModel",
    "FitConfig",
    "FitReport",
    "DegenerateModelError",
    "e_step",
    "e_step_student",
    "m_step",
    "fit",
    "log_likelihood",
]


class DegenerateModelError(RuntimeError):
    """A cluster stayed degenerate after the reseeding retries."""


@dataclass(frozen=True)
class FitConfig:
    """Settings for one flexible-EM fit.

    ``version`` selects the fixed-point update variant (it overrides the
    value inside ``fixed_point``).  ``init`` is either ``"kmeans"`` (seeded
    by ``seed``) or a MixtureModel to start from.  ``likelihood_monitor``
    is None, ``"gaussian"`` or ``"student_t"`` (the latter needs
    ``monitor_dof``, one degrees-of-freedom value per cluster).
    """

    version: int = 1
    em_max_iters: int = 200
    em_tol: float = 1e-6
    fixed_point: FixedPointConfig = field(default_factory=FixedPointConfig)
    init: str | MixtureModel = "kmeans"
    seed: int = 0
    likelihood_monitor: str | None = None
    monitor_dof: tuple[float, ...] | None = None
    monitor_strict: bool = False
    tau_each_iter: bool = False

    def __post_init__(self):
        if self.version not in (1, 2, 3, 4):
            raise ValueError("version must be 1..4")
        if not self.em_tol > 0:
            raise ValueError("em_tol must be positive")
        if self.likelihood_monitor not in (None, "gaussian", "student_t"):
            raise ValueError("likelihood_monitor must be None, 'gaussian' or 'student_t'")
        if self.likelihood_monitor == "student_t" and self.monitor_dof is None:
            raise ValueError("student_t monitor needs monitor_dof")


@dataclass
class FitReport:
    """Outcome of one fit: labels, model, scale estimates and diagnostics."""

    labels: np.ndarray
    model: MixtureModel
    tau: np.ndarray
    loglik_trace: list[float]
    em_iters: int
    converged: bool
    per_cluster_fp_iters: list[list[int]]
    fp_converged: list[bool]
    algorithm: str = "fem"
    tau_trace: list[np.ndarray] | None = None

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "algorithm": self.algorithm,
            "labels": [int(v) for v in self.labels],
            "model": self.model.to_dict(),
            "tau": self.tau.tolist(),
            "loglik_trace": [float(v) for v in self.loglik_trace],
            "em_iters": self.em_iters,
            "converged": bool(self.converged),
            "per_cluster_fp_iters": self.per_cluster_fp_iters,
            "fp_converged": [bool(v) for v in self.fp_converged],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(
            labels=np.asarray(d["labels"], dtype=int),
            model=MixtureModel.from_dict(d["model"]),
            tau=np.asarray(d["tau"], dtype=float),
            loglik_trace=list(d.get("loglik_trace", [])),
            em_iters=int(d["em_iters"]),
            converged=bool(d["converged"]),
            per_cluster_fp_iters=[list(v) for v in d.get("per_cluster_fp_iters", [])],
            fp_converged=[bool(v) for v in d.get("fp_converged", [])],
            algorithm=d.get("algorithm", "fem"),
        )


def _log_l0(X: np.ndarray, model: MixtureModel, tau_floor: float) -> np.ndarray:
    """log of the distribution-free factor: -m/2 log(quadform) - 1/2 log|Sigma|."""
    n, m = X.shape
    k = model.n_clusters
    out = np.empty((n, k))
    for j in range(k):
        try:
            chol = np.linalg.cholesky(model.sigma[j])
        except np.linalg.LinAlgError:
            raise ValueError(f"cluster {j}: scatter matrix not SPD") from None
        q = np.maximum(chol_quadforms(X, model.mu[j], chol), tau_floor)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out[:, j] = -0.5 * m * np.log(q) - 0.5 * logdet
    return out


def _normalize_rows(logits: np.ndarray) -> np.ndarray:
    p = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
    return p / p.sum(axis=1, keepdims=True)


def e_step(X, model: MixtureModel, tau_floor: float = TAU_FLOOR) -> np.ndarray:
    """Distribution-free responsibilities.

    p_ik is proportional to pi_k (quadform_ik)^{-m/2} |Sigma_k|^{-1/2},
    evaluated in log space and softmax-normalised per row.
    """
    X = np.asarray(X, dtype=float)
    logits = np.log(model.pi)[None, :] + _log_l0(X, model, tau_floor)
    return _normalize_rows(logits)


def e_step_student(X, model: MixtureModel, dof: Sequence[float],
                   mode: str = "exact", tau_floor: float = TAU_FLOOR) -> np.ndarray:
    """Responsibilities for a mixture of t distributions with known dof.

    ``mode="exact"`` weighs each cluster by sup_t t^{m/2} g_k(t) from the
    per-cluster t profile; ``mode="approx"`` uses the large-dimension
    surrogate sqrt(c_k / (1 + c_k)) with c_k = dof_k / m.  Both reduce to
    the plain E-step when all dof are equal.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[1]
    dof = np.asarray(dof, dtype=float)
    if dof.shape != (model.n_clusters,):
        raise ValueError("need one dof per cluster")
    if np.any(dof <= 0):
        raise ValueError("dof must be positive")
    if mode == "exact":
        # log sup_t t^{m/2} g_k(t), evaluated at the maximiser t = m.
        const = np.array([StudentT(nu).log_g(float(m), m) for nu in dof])
        const += 0.5 * m * math.log(m)
    elif mode == "approx":
        c = dof / m
        const = 0.5 * (np.log(c) - np.log1p(c))
    else:
        raise ValueError("mode must be 'exact' or 'approx'")
    logits = np.log(model.pi)[None, :] + _log_l0(X, model, tau_floor) + const[None, :]
    return _normalize_rows(logits)


def m_step(X, P, prev: MixtureModel, cfg: FitConfig
           ) -> tuple[MixtureModel, list[FixedPointResult]]:
    """One maximisation pass: proportions plus per-cluster fixed points."""
    X = np.asarray(X, dtype=float)
    P = np.asarray(P, dtype=float)
    pi = update_pi(P)
    fp_cfg = replace(cfg.fixed_point, version=cfg.version)
    mu = np.empty_like(prev.mu)
    sigma = np.empty_like(prev.sigma)
    results = []
    for j in range(prev.n_clusters):
        try:
            res = fixed_point_mu_sigma(X, P[:, j], prev.mu[j], prev.sigma[j], fp_cfg)
        except DegenerateClusterError as exc:
            raise DegenerateClusterError(str(exc), cluster=j) from None
        mu[j], sigma[j] = res.mu, res.sigma
        results.append(res)
    return MixtureModel(pi, mu, sigma), results


def log_likelihood(X, model: MixtureModel,
                   gens: DensityGenerator | Sequence[DensityGenerator],
                   tau: np.ndarray) -> float:
    """Observed mixture log-likelihood with the given scale estimates.

    Needs generators with a known normalisation constant (Gaussian or
    Student-t).  Evaluated in log space.
    """
    X = np.asarray(X, dtype=float)
    tau = np.asarray(tau, dtype=float)
    n, m = X.shape
    k = model.n_clusters
    if isinstance(gens, DensityGenerator):
        gens = [gens] * k
    if tau.shape != (n, k):
        raise ValueError("tau must have shape (n, K)")
    logf = np.empty((n, k))
    for j in range(k):
        chol = np.linalg.cholesky(model.sigma[j])
        q = chol_quadforms(X, model.mu[j], chol)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        logf[:, j] = (
            gens[j].log_norm_const(m)
            - 0.5 * logdet
            - 0.5 * m * np.log(tau[:, j])
            + gens[j].log_g(q / tau[:, j], m)
        )
    return float(logsumexp(np.log(model.pi)[None, :] + logf, axis=1).sum())


def _monitor_generators(cfg: FitConfig, k: int) -> list[DensityGenerator] | None:
    if cfg.likelihood_monitor is None:
        return None
    if cfg.likelihood_monitor == "gaussian":
        return [Gaussian()] * k
    dof = cfg.monitor_dof
    if len(dof) != k:
        raise ValueError("monitor_dof must have one entry per cluster")
    return [StudentT(float(nu)) for nu in dof]


def _rel_change(old: MixtureModel, new: MixtureModel) -> float:
    num = (
        np.linalg.norm(new.pi - old.pi)
        + np.linalg.norm(new.mu - old.mu)
        + np.linalg.norm((new.sigma - old.sigma).ravel())
    )
    den = (
        np.linalg.norm(old.pi)
        + np.linalg.norm(old.mu)
        + np.linalg.norm(old.sigma.ravel())
    )
    return num / den


def _init_model(X: np.ndarray, k: int, cfg: FitConfig) -> MixtureModel:
    n, m = X.shape
    if isinstance(cfg.init, MixtureModel):
        if cfg.init.n_clusters != k or cfg.init.dim != m:
            raise ValueError(
                f"init model is {cfg.init.n_clusters} clusters in dimension "
                f"{cfg.init.dim}, expected {k} in {m}")
        cfg.init.validate()
        return cfg.init.copy()
    if cfg.init != "kmeans":
        raise ValueError("init must be 'kmeans' or a MixtureModel")
    from .baselines import kmeans  # deferred: baselines builds on this module

    km = kmeans(X, k, seed=cfg.seed)
    counts = np.bincount(km.labels, minlength=k).astype(float)
    pi = np.maximum(counts, 1.0) / np.maximum(counts, 1.0).sum()
    sigma = np.broadcast_to(np.eye(m), (k, m, m)).copy()
    return MixtureModel(pi, km.centers.copy(), sigma)


def fit(X, k: int, cfg: FitConfig | None = None) -> FitReport:
    """Run the flexible EM algorithm and return the full fit report.

    Means start at the k-means solution, scatters at the identity and all
    scale parameters at one.  Alternates the distribution-free E-step with
    per-cluster fixed-point M-steps until the relative parameter change
    falls below ``cfg.em_tol``.  A degenerate cluster is reseeded at the
    worst-explained observation up to three times.
    """
    cfg = cfg or FitConfig()
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    if k < 1:
        raise ValueError("need at least one cluster")
    if n <= m * (2 * m - 1):
        warnings.warn(
            f"n={n} does not satisfy n > m(2m-1)={m * (2 * m - 1)}; "
            "scale estimates may be unreliable",
            stacklevel=2,
        )

    model = _init_model(X, k, cfg)
    monitor_gens = _monitor_generators(cfg, k)

    loglik_trace: list[float] = []
    fp_iters_trace: list[list[int]] = []
    fp_converged: list[bool] = []
    tau_trace: list[np.ndarray] | None = [] if cfg.tau_each_iter else None
    converged = False
    retries = 0
    em_iters = 0
    P = None

    it = 0
    while it < cfg.em_max_iters:
        P = e_step(X, model, tau_floor=cfg.fixed_point.tau_floor)
        try:
            new_model, fp_results = m_step(X, P, model, cfg)
        except DegenerateClusterError as exc:
            retries += 1
            if retries > 3 or exc.cluster is None:
                raise DegenerateModelError(
                    f"cluster {exc.cluster} degenerate after {retries - 1} reseeds "
                    f"at EM iteration {it + 1}"
                ) from exc
            worst = int(np.argmin(P.max(axis=1)))
            model.mu[exc.cluster] = X[worst]
            model.sigma[exc.cluster] = np.eye(m)
            continue
        it += 1
        em_iters = it
        fp_iters_trace.append([r.iters for r in fp_results])
        all_fp_ok = all(r.converged for r in fp_results)
        fp_converged.append(all_fp_ok)

        if monitor_gens is not None:
            tau_now = estimate_tau(X, new_model, monitor_gens,
                                   tau_floor=cfg.fixed_point.tau_floor)
            ll = log_likelihood(X, new_model, monitor_gens, tau_now)
            if loglik_trace and all_fp_ok:
                prev = loglik_trace[-1]
                if ll < prev - 1e-8 * abs(prev):
                    msg = (f"log-likelihood decreased at EM iteration {it}: "
                           f"{prev:.10g} -> {ll:.10g}")
                    if cfg.monitor_strict:
                        raise RuntimeError(msg)
                    warnings.warn(msg, stacklevel=2)
            loglik_trace.append(ll)
            if tau_trace is not None:
                tau_trace.append(tau_now)

        delta = _rel_change(model, new_model)
        model = new_model
        if delta < cfg.em_tol:
            converged = True
            break

    P = e_step(X, model, tau_floor=cfg.fixed_point.tau_floor)
    labels = np.argmax(P, axis=1)
    tau = estimate_tau(X, model, monitor_gens if monitor_gens is not None else Gaussian(),
                       tau_floor=cfg.fixed_point.tau_floor)
    return FitReport(
        labels=labels,
        model=model,
        tau=tau,
        loglik_trace=loglik_trace,
        em_iters=em_iters,
        converged=converged,
        per_cluster_fp_iters=fp_iters_trace,
        fp_converged=fp_converged,
        algorithm=f"fem{cfg.version}",
        tau_trace=tau_trace,
    )

"""Elliptical-distribution machinery.

Density generators, sampling through the stochastic representation
``x = mu + sqrt(Q) sqrt(tau) A u``, structured scatter-matrix builders and
the five synthetic benchmark setups.

Conventions
-----------
- Gaussian, k-distribution and generalized-Gaussian modular variates are
  normalised so that ``E[Q] = m`` (the dimension) and ``tau * Sigma`` is
  the covariance.  The Student-t generator uses the textbook scale-matrix
  parameterisation instead (``Q = m F(m, dof)``, covariance
  ``tau * Sigma * dof/(dof-2)``), consistently in its sampler, its density
  generator and the benchmark setups.
- Scatter matrices produced by estimators elsewhere in the package have
  trace ``m``; data-generating matrices carry whatever trace the setup
  prescribes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, kve

NOISE = -1

_LOG_T_MIN = -700.0
_LOG_T_MAX = 700.0
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class DensityGenerator:
    """Radial profile g of an elliptically symmetric density.

    Subclasses expose the log of ``g`` (up to the normalisation constant
    that cancels in the E-step), the maximiser of ``t^{m/2} g(t)`` used by
    the scale estimator, and a sampler for the modular variate ``Q`` with
    ``E[Q] = m``.
    """

    name = "abstract"

    def log_g(self, t: np.ndarray | float, m: int) -> np.ndarray:
        raise NotImplementedError

    def argsup(self, m: int) -> float:
        """Maximiser of t -> t^{m/2} g(t) over t > 0."""
        return _golden_argsup(self, m)

    def sample_q(self, m: int, size: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def log_norm_const(self, m: int) -> float:
        """Log of the density normalisation constant, when it is known."""
        raise NotImplementedError(
            f"{self.name}: no closed-form normalisation constant; "
            "exact likelihood evaluation is unsupported for this generator"
        )

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(DensityGenerator):
    """g(t) = exp(-t/2)."""

    name = "gaussian"

    def log_g(self, t, m):
        return -0.5 * np.asarray(t, dtype=float)

    def argsup(self, m):
        return float(m)

    def sample_q(self, m, size, rng):
        return rng.chisquare(m, size=size)

    def log_norm_const(self, m):
        return -0.5 * m * math.log(2.0 * math.pi)

    def to_dict(self):
        return {"kind": self.name}


@dataclass(frozen=True)
class StudentT(DensityGenerator):
    """Multivariate t radial profile with `dof` degrees of freedom.

    Both ``g`` and the sampler use tau*Sigma as the *scale* matrix of the t
    density (the textbook parameterisation): ``Q = m F(m, dof)``, so the
    covariance is tau*Sigma*dof/(dof-2) when dof > 2.
    """

    dof: float
    name = "student_t"

    def __post_init__(self):
        if not self.dof > 0:
            raise ValueError("StudentT dof must be positive")

    def log_g(self, t, m):
        nu = self.dof
        t = np.asarray(t, dtype=float)
        return (
            gammaln((nu + m) / 2.0)
            - gammaln(nu / 2.0)
            - 0.5 * m * math.log(nu)
            - 0.5 * (nu + m) * np.log1p(t / nu)
        )

    def argsup(self, m):
        return float(m)

    def sample_q(self, m, size, rng):
        return float(m) * rng.f(m, self.dof, size=size)

    def log_norm_const(self, m):
        return -0.5 * m * math.log(math.pi)

    def to_dict(self):
        return {"kind": self.name, "dof": self.dof}


@dataclass(frozen=True)
class KDist(DensityGenerator):
    """Compound-Gaussian with Gamma(shape, 1/shape) texture (k-distribution).

    The unit-mean texture keeps ``E[Q] = m`` so that tau*Sigma is the
    covariance.  ``g(t) ~ t^{(s - m/2)/2} K_{s - m/2}(sqrt(2 s t))`` with
    ``K`` the modified Bessel function of the second kind.
    """

    shape: float
    name = "k_dist"

    def __post_init__(self):
        if not self.shape > 0:
            raise ValueError("KDist shape must be positive")

    def log_g(self, t, m):
        s = self.shape
        t = np.maximum(np.asarray(t, dtype=float), 1e-300)
        order = s - 0.5 * m
        z = np.sqrt(2.0 * s * t)
        # kve(v, z) = K_v(z) * exp(z) stays finite for large z
        return 0.5 * order * np.log(t) + np.log(kve(order, z)) - z

    def sample_q(self, m, size, rng):
        texture = rng.gamma(self.shape, 1.0 / self.shape, size=size)
        return texture * rng.chisquare(m, size=size)

    def to_dict(self):
        return {"kind": self.name, "shape": self.shape}


@dataclass(frozen=True)
class GenGaussian(DensityGenerator):
    """Multivariate generalized Gaussian with shape parameter `shape`.

    ``g(t) = exp(-t^shape / (2b))`` where the scale ``b`` depends on the
    dimension and is fixed by ``E[Q] = m``.  shape < 1 gives tails heavier
    than Gaussian, shape > 1 lighter.
    """

    shape: float
    name = "gen_gaussian"

    def __post_init__(self):
        if not self.shape > 0:
            raise ValueError("GenGaussian shape must be positive")

    def _log_2b(self, m: int) -> float:
        # E[Q] = (2b)^{1/shape} Gamma(c + 1/shape) / Gamma(c) = m, c = m/(2 shape)
        c = m / (2.0 * self.shape)
        return self.shape * (
            math.log(m) + gammaln(c) - gammaln(c + 1.0 / self.shape)
        )

    def log_g(self, t, m):
        t = np.asarray(t, dtype=float)
        log_2b = self._log_2b(m)
        # capped exponent: beyond exp(700) the value is -inf anyway
        exponent = self.shape * np.log(np.maximum(t, 1e-300)) - log_2b
        return -np.exp(np.minimum(exponent, 700.0))

    def sample_q(self, m, size, rng):
        c = m / (2.0 * self.shape)
        y = rng.gamma(c, 1.0, size=size)
        return np.exp((self._log_2b(m) + np.log(y)) / self.shape)

    def to_dict(self):
        return {"kind": self.name, "shape": self.shape}


def generator_from_dict(d: dict) -> DensityGenerator:
    kind = d.get("kind")
    if kind == "gaussian":
        return Gaussian()
    if kind == "student_t":
        return StudentT(dof=float(d["dof"]))
    if kind == "k_dist":
        return KDist(shape=float(d["shape"]))
    if kind == "gen_gaussian":
        return GenGaussian(shape=float(d["shape"]))
    raise ValueError(f"unknown density generator kind: {kind!r}")


def _golden_argsup(gen: DensityGenerator, m: int, tol: float = 1e-10) -> float:
    """Golden-section maximisation of u -> (m/2) u + log g(e^u) over u = log t."""

    def h(u):
        return 0.5 * m * u + float(gen.log_g(math.exp(u), m))

    # Bracket the maximum starting from log(m), expanding uphill.
    step = 1.0
    ub = math.log(m)
    ua, uc = ub - step, ub + step
    ha, hb, hc = h(ua), h(ub), h(uc)
    while hc > hb:
        ua, ha = ub, hb
        ub, hb = uc, hc
        step *= 2.0
        uc = ub + step
        if uc > _LOG_T_MAX:
            raise ValueError("no finite maximizer")
        hc = h(uc)
    step = 1.0
    while ha > hb:
        uc, hc = ub, hb
        ub, hb = ua, ha
        step *= 2.0
        ua = ub - step
        if ua < _LOG_T_MIN:
            raise ValueError("no finite maximizer")
        ha = h(ua)

    # Golden-section refinement; tol on log t equals relative tol on t.
    x1 = uc - _INV_GOLDEN * (uc - ua)
    x2 = ua + _INV_GOLDEN * (uc - ua)
    h1, h2 = h(x1), h(x2)
    while uc - ua > tol:
        if h1 >= h2:
            uc, x2, h2 = x2, x1, h1
            x1 = uc - _INV_GOLDEN * (uc - ua)
            h1 = h(x1)
        else:
            ua, x1, h1 = x1, x2, h2
            x2 = ua + _INV_GOLDEN * (uc - ua)
            h2 = h(x2)

    # Parabolic polish: golden section alone stalls at the sqrt(eps) plateau
    # because h is flat near the maximum.
    u = 0.5 * (ua + uc)
    for delta in (1e-4, 1e-6):
        hm, h0, hp = h(u - delta), h(u), h(u + delta)
        denom = hm - 2.0 * h0 + hp
        if denom < 0:
            u += 0.5 * delta * (hm - hp) / denom
    return math.exp(u)


def argsup_density(gen: DensityGenerator, m: int) -> float:
    """Global maximiser of t -> t^{m/2} g(t); closed form when available."""
    if m < 1:
        raise ValueError("dimension m must be >= 1")
    return gen.argsup(m)


# ---------------------------------------------------------------------------
# Scatter-matrix builders
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceSpec:
    """Structured SPD matrix: identity, fixed diagonal or AR(1) Toeplitz.

    ``target_trace`` rescales the realised matrix; None keeps it as built.
    """

    kind: str
    scale: float = 1.0
    entries: tuple[float, ...] | None = None
    rho: float = 0.0
    target_trace: float | None = None

    @classmethod
    def identity(cls, scale: float = 1.0, target_trace: float | None = None):
        return cls(kind="identity", scale=scale, target_trace=target_trace)

    @classmethod
    def diagonal(cls, entries, target_trace: float | None = None):
        return cls(kind="diagonal", entries=tuple(float(e) for e in entries),
                   target_trace=target_trace)

    @classmethod
    def toeplitz(cls, rho: float, target_trace: float | None = None):
        return cls(kind="toeplitz", rho=float(rho), target_trace=target_trace)

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "identity":
            d["scale"] = self.scale
        elif self.kind == "diagonal":
            d["entries"] = list(self.entries)
        elif self.kind == "toeplitz":
            d["rho"] = self.rho
        if self.target_trace is not None:
            d["trace"] = self.target_trace
        return d


def make_covariance(spec: CovarianceSpec, m: int) -> np.ndarray:
    """Realise a CovarianceSpec as an SPD (m, m) matrix."""
    if spec.kind == "identity":
        if not spec.scale > 0:
            raise ValueError("identity scale must be positive")
        sigma = spec.scale * np.eye(m)
    elif spec.kind == "diagonal":
        entries = np.asarray(spec.entries, dtype=float)
        if entries.shape != (m,):
            raise ValueError(f"diagonal needs {m} entries, got {entries.shape}")
        if np.any(entries <= 0):
            raise ValueError("non-positive diagonal entry")
        sigma = np.diag(entries)
    elif spec.kind == "toeplitz":
        if not 0.0 <= spec.rho < 1.0:
            raise ValueError("toeplitz rho must lie in [0, 1)")
        idx = np.arange(m)
        sigma = spec.rho ** np.abs(idx[:, None] - idx[None, :])
    else:
        raise ValueError(f"unknown covariance kind: {spec.kind!r}")
    if spec.target_trace is not None:
        if not spec.target_trace > 0:
            raise ValueError("target trace must be positive")
        sigma = sigma * (spec.target_trace / np.trace(sigma))
    return sigma


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_elliptical(mu, sigma, tau, gen: DensityGenerator,
                      rng: np.random.Generator, size: int | None = None):
    """Draw from ES(mu, tau*Sigma, g) via x = mu + sqrt(Q tau) A u.

    ``A`` is the Cholesky factor of ``sigma`` and ``u`` is uniform on the
    unit sphere.  Returns one m-vector, or an (size, m) array.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    m = mu.shape[0]
    if not tau > 0:
        raise ValueError("tau must be positive")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise ValueError("Sigma not SPD") from None
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, m))
    u = z / np.linalg.norm(z, axis=1, keepdims=True)
    q = gen.sample_q(m, n, rng)
    x = mu + np.sqrt(q * tau)[:, None] * (u @ chol.T)
    return x[0] if size is None else x


# ---------------------------------------------------------------------------
# Mixture models and synthetic setups
# ---------------------------------------------------------------------------

@dataclass
class MixtureModel:
    """K component triples (pi_k, mu_k, Sigma_k)."""

    pi: np.ndarray      # (K,)
    mu: np.ndarray      # (K, m)
    sigma: np.ndarray   # (K, m, m)

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.sigma.ndim == 2:
            self.sigma = self.sigma[None, :, :]

    @property
    def n_clusters(self) -> int:
        return self.pi.shape[0]

    @property
    def dim(self) -> int:
        return self.mu.shape[1]

    def copy(self) -> "MixtureModel":
        return MixtureModel(self.pi.copy(), self.mu.copy(), self.sigma.copy())

    def validate(self, require_trace_m: bool = False, atol: float = 1e-10) -> None:
        k, m = self.n_clusters, self.dim
        if self.mu.shape != (k, m) or self.sigma.shape != (k, m, m):
            raise ValueError("inconsistent mixture model shapes")
        if not math.isclose(float(self.pi.sum()), 1.0, rel_tol=0, abs_tol=1e-8):
            raise ValueError("mixture proportions must sum to 1")
        if np.any(self.pi <= 0) or np.any(self.pi > 1):
            raise ValueError("each proportion must lie in (0, 1]")
        for j in range(k):
            np.linalg.cholesky(self.sigma[j])
            if require_trace_m:
                tr = float(np.trace(self.sigma[j]))
                if abs(tr - m) > atol * m:
                    raise ValueError(f"cluster {j}: trace {tr} != dimension {m}")

    def to_dict(self) -> dict:
        return {
            "pi": self.pi.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.reshape(self.n_clusters, -1).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureModel":
        pi = np.asarray(d["pi"], dtype=float)
        mu = np.asarray(d["mu"], dtype=float)
        k, m = mu.shape
        sigma = np.asarray(d["sigma"], dtype=float).reshape(k, m, m)
        return cls(pi, mu, sigma)


@dataclass(frozen=True)
class MeanSpec:
    """Cluster mean rule: ones*c + e1*d plus optional random offsets.

    ``uniform=(lo, hi)`` adds an m-vector of iid U(lo, hi) draws and
    ``normal_var`` adds iid N(0, normal_var) noise, both realised once per
    generated dataset.
    """

    ones: float = 0.0
    e1: float = 0.0
    uniform: tuple[float, float] | None = None
    normal_var: float = 0.0

    def realize(self, m: int, rng: np.random.Generator) -> np.ndarray:
        mean = np.full(m, self.ones, dtype=float)
        mean[0] += self.e1
        if self.uniform is not None:
            lo, hi = self.uniform
            mean += rng.uniform(lo, hi, size=m)
        if self.normal_var > 0:
            mean += rng.normal(0.0, math.sqrt(self.normal_var), size=m)
        return mean

    def to_dict(self) -> dict:
        d: dict = {}
        if self.ones:
            d["ones"] = self.ones
        if self.e1:
            d["e1"] = self.e1
        if self.uniform is not None:
            d["uniform"] = list(self.uniform)
        if self.normal_var:
            d["normal_var"] = self.normal_var
        return d


@dataclass(frozen=True)
class RandomDiagonalSpec:
    """Diagonal scatter with entries drawn U(low, high), rescaled to a trace.

    Stands in for the benchmark tables' unspecified diagonal matrices; the
    draw happens once per generated dataset.
    """

    low: float = 0.2
    high: float = 3.5
    target_trace: float | None = None

    def realize(self, m: int, rng: np.random.Generator) -> CovarianceSpec:
        entries = rng.uniform(self.low, self.high, size=m)
        return CovarianceSpec.diagonal(entries, target_trace=self.target_trace)

    def to_dict(self) -> dict:
        d: dict = {"kind": "random_diagonal", "low": self.low, "high": self.high}
        if self.target_trace is not None:
            d["trace"] = self.target_trace
        return d


@dataclass(frozen=True)
class ClusterSpec:
    mean: MeanSpec
    cov: CovarianceSpec | RandomDiagonalSpec
    generators: tuple[tuple[float, DensityGenerator], ...]

    def __post_init__(self):
        w = sum(weight for weight, _ in self.generators)
        if not math.isclose(w, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError("within-cluster generator weights must sum to 1")

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.to_dict(),
            "cov": self.cov.to_dict(),
            "generators": [
                dict(weight=w, **g.to_dict()) for w, g in self.generators
            ],
        }


@dataclass(frozen=True)
class SetupSpec:
    """Recipe for one synthetic benchmark dataset."""

    m: int
    n: int
    clusters: tuple[ClusterSpec, ...]
    proportions: tuple[float, ...] | None = None   # None: random admissible
    noise_fraction: float = 0.0
    noise_box: tuple[float, float] = (0.0, 14.0)
    setup_id: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.noise_fraction < 0.5:
            raise ValueError("noise_fraction must lie in [0, 0.5)")
        if self.proportions is not None:
            if len(self.proportions) != len(self.clusters):
                raise ValueError("proportions length must match cluster count")
            if not math.isclose(sum(self.proportions), 1.0, abs_tol=1e-9):
                raise ValueError("proportions must sum to 1")

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def to_dict(self) -> dict:
        d: dict = {
            "m": self.m,
            "n": self.n,
            "clusters": [c.to_dict() for c in self.clusters],
        }
        if self.setup_id is not None:
            d["setup_id"] = self.setup_id
        if self.proportions is not None:
            d["proportions"] = list(self.proportions)
        if self.noise_fraction:
            d["noise_fraction"] = self.noise_fraction
            d["noise_box"] = list(self.noise_box)
        return d


@dataclass
class LabeledSample:
    data: np.ndarray      # (n, m)
    labels: np.ndarray    # (n,) ints, NOISE rows labelled -1
    truth: MixtureModel


def _mean_from_dict(d: dict) -> MeanSpec:
    uniform = tuple(d["uniform"]) if "uniform" in d else None
    return MeanSpec(
        ones=float(d.get("ones", 0.0)),
        e1=float(d.get("e1", 0.0)),
        uniform=uniform,
        normal_var=float(d.get("normal_var", 0.0)),
    )


def _cov_from_dict(d: dict) -> CovarianceSpec | RandomDiagonalSpec:
    kind = d.get("kind")
    trace = d.get("trace")
    trace = float(trace) if trace is not None else None
    if kind == "random_diagonal":
        return RandomDiagonalSpec(low=float(d.get("low", 0.2)),
                                  high=float(d.get("high", 3.5)),
                                  target_trace=trace)
    if kind == "identity":
        return CovarianceSpec.identity(float(d.get("scale", 1.0)), trace)
    if kind == "diagonal":
        return CovarianceSpec.diagonal(d["entries"], trace)
    if kind == "toeplitz":
        return CovarianceSpec.toeplitz(float(d["rho"]), trace)
    raise ValueError(f"unknown covariance kind: {kind!r}")


def setup_from_dict(d: dict) -> SetupSpec:
    """Build a SetupSpec from the documented config keys.

    Keys: ``m``, ``n``, ``clusters`` (list of tables with ``mean``, ``cov``
    and ``generators``), optional ``proportions``, ``noise_fraction``,
    ``noise_box`` and ``setup_id``.  ``setup = <1..5>`` shorthand selects a
    builtin benchmark setup.
    """
    if "setup" in d and "clusters" not in d:
        return builtin_setup(int(d["setup"]))
    try:
        clusters = []
        for c in d["clusters"]:
            gens = tuple(
                (float(g.get("weight", 1.0)), generator_from_dict(g))
                for g in c["generators"]
            )
            clusters.append(ClusterSpec(mean=_mean_from_dict(c.get("mean", {})),
                                        cov=_cov_from_dict(c["cov"]),
                                        generators=gens))
        proportions = d.get("proportions")
        return SetupSpec(
            m=int(d["m"]),
            n=int(d["n"]),
            clusters=tuple(clusters),
            proportions=tuple(proportions) if proportions is not None else None,
            noise_fraction=float(d.get("noise_fraction", 0.0)),
            noise_box=tuple(d.get("noise_box", (0.0, 14.0))),
            setup_id=d.get("setup_id"),
        )
    except KeyError as exc:
        raise ValueError(f"setup config: missing key {exc}") from None


def _draw_proportions(k: int, rng: np.random.Generator,
                      min_share: float = 0.15) -> np.ndarray:
    # Dirichlet(5, ..., 5) rejected until no cluster is trivial or giant.
    for _ in range(1000):
        pi = rng.dirichlet(np.full(k, 5.0))
        if pi.min() >= min_share:
            return pi
    raise RuntimeError("failed to draw admissible mixing proportions")


def generate_setup(spec: SetupSpec, rng: np.random.Generator) -> LabeledSample:
    """Draw one labelled dataset following `spec`; rows come out shuffled."""
    m, n, k = spec.m, spec.n, spec.n_clusters
    if spec.proportions is not None:
        pi = np.asarray(spec.proportions, dtype=float)
    else:
        pi = _draw_proportions(k, rng)

    n_noise = int(round(spec.noise_fraction * n))
    n_signal = n - n_noise
    for _ in range(100):
        sizes = rng.multinomial(n_signal, pi)
        if sizes.min() >= 1:
            break
    else:
        raise RuntimeError("empty cluster after repeated size draws")

    means = np.empty((k, m))
    covs = np.empty((k, m, m))
    rows, labels = [], []
    for j, cluster in enumerate(spec.clusters):
        means[j] = cluster.mean.realize(m, rng)
        cov_spec = cluster.cov
        if isinstance(cov_spec, RandomDiagonalSpec):
            cov_spec = cov_spec.realize(m, rng)
        covs[j] = make_covariance(cov_spec, m)
        size = int(sizes[j])
        weights = np.array([w for w, _ in cluster.generators])
        gens = [g for _, g in cluster.generators]
        if len(gens) == 1:
            x = sample_elliptical(means[j], covs[j], 1.0, gens[0], rng, size=size)
        else:
            which = rng.choice(len(gens), size=size, p=weights)
            x = np.empty((size, m))
            for gi, gen in enumerate(gens):
                mask = which == gi
                if mask.any():
                    x[mask] = sample_elliptical(means[j], covs[j], 1.0, gen,
                                                rng, size=int(mask.sum()))
        rows.append(x)
        labels.append(np.full(size, j, dtype=int))

    if n_noise > 0:
        lo, hi = spec.noise_box
        rows.append(rng.uniform(lo, hi, size=(n_noise, m)))
        labels.append(np.full(n_noise, NOISE, dtype=int))

    data = np.vstack(rows)
    labels = np.concatenate(labels)
    order = rng.permutation(n)
    truth = MixtureModel(pi, means, covs)
    return LabeledSample(data=data[order], labels=labels[order], truth=truth)


def builtin_setup(setup_id: int) -> SetupSpec:
    """The five synthetic benchmark setups."""
    gauss = Gaussian()
    if setup_id == 1:
        t3 = StudentT(3.0)
        return SetupSpec(
            m=8, n=1000, setup_id=1,
            clusters=(
                ClusterSpec(MeanSpec(uniform=(0.0, 1.0)),
                            RandomDiagonalSpec(target_trace=8.0), ((1.0, t3),)),
                ClusterSpec(MeanSpec(ones=6.0),
                            RandomDiagonalSpec(target_trace=12.0), ((1.0, t3),)),
                ClusterSpec(MeanSpec(ones=1.5, e1=3.0),
                            CovarianceSpec.identity(scale=4.0 / 8.0), ((1.0, t3),)),
            ),
        )
    if setup_id == 2:
        t10 = StudentT(10.0)
        return SetupSpec(
            m=8, n=1000, setup_id=2,
            clusters=(
                ClusterSpec(MeanSpec(uniform=(0.0, 1.0)),
                            RandomDiagonalSpec(target_trace=8.0), ((1.0, t10),)),
                ClusterSpec(MeanSpec(ones=5.0),
                            RandomDiagonalSpec(target_trace=8.0), ((1.0, t10),)),
                ClusterSpec(MeanSpec(ones=1.5, normal_var=0.1),
                            CovarianceSpec.identity(), ((1.0, t10),)),
            ),
        )
    if setup_id == 3:
        return SetupSpec(
            m=40, n=1300, setup_id=3,
            clusters=(
                ClusterSpec(MeanSpec(ones=2.0), CovarianceSpec.toeplitz(0.2),
                            ((1.0, KDist(3.0)),)),
                ClusterSpec(MeanSpec(ones=6.0), CovarianceSpec.identity(),
                            ((1.0, StudentT(6.0)),)),
                ClusterSpec(MeanSpec(ones=7.0), CovarianceSpec.toeplitz(0.5),
                            ((1.0, gauss),)),
            ),
        )
    if setup_id == 4:
        return SetupSpec(
            m=8, n=1200, setup_id=4, noise_fraction=0.1,
            clusters=(
                ClusterSpec(MeanSpec(ones=5.0), CovarianceSpec.toeplitz(0.2),
                            ((1.0, gauss),)),
                ClusterSpec(MeanSpec(ones=7.0), CovarianceSpec.identity(),
                            ((1.0, gauss),)),
                ClusterSpec(MeanSpec(ones=9.0), CovarianceSpec.toeplitz(0.5),
                            ((1.0, gauss),)),
            ),
        )
    if setup_id == 5:
        return SetupSpec(
            m=6, n=1200, setup_id=5,
            clusters=(
                ClusterSpec(MeanSpec(uniform=(0.0, 0.2)),
                            CovarianceSpec.toeplitz(0.4),
                            ((0.7, gauss), (0.3, GenGaussian(0.1)))),
                ClusterSpec(MeanSpec(ones=2.0), CovarianceSpec.identity(),
                            ((0.6, gauss), (0.4, StudentT(2.3)))),
                ClusterSpec(MeanSpec(ones=4.0, e1=2.0),
                            CovarianceSpec.toeplitz(0.7), ((1.0, gauss),)),
            ),
        )
    raise ValueError(f"setup_id must be 1..5, got {setup_id}")


def save_dataset_csv(data: np.ndarray, labels: np.ndarray | None, path) -> None:
    """Write one observation per row; final column is the integer label."""
    data = np.asarray(data, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(data.shape[0]):
            row = [repr(float(v)) for v in data[i]]
            if labels is not None:
                row.append(str(int(labels[i])))
            writer.writerow(row)

"""Robust EM clustering for mixtures of elliptically symmetric
distributions with one scale nuisance parameter per observation."""

from .baselines import KMeansResult, gmm_em, kmeans
from .elliptic import (
    NOISE,
    CovarianceSpec,
    DensityGenerator,
    Gaussian,
    GenGaussian,
    KDist,
    LabeledSample,
    MixtureModel,
    SetupSpec,
    StudentT,
    argsup_density,
    builtin_setup,
    generate_setup,
    make_covariance,
    sample_elliptical,
    save_dataset_csv,
)
from .estimators import (
    DegenerateClusterError,
    FixedPointConfig,
    estimate_tau,
    fixed_point_mu_sigma,
    mahalanobis_sq,
    tyler_estimator,
    update_pi,
)
from .fem import (
    FitConfig,
    FitReport,
    e_step,
    e_step_student,
    fit,
    log_likelihood,
    m_step,
)
from .harness import ExperimentConfig, emit_results, load_csv, run_experiment
from .metrics import accuracy, ami, ari, match_clusters, mu_error, sigma_error

__version__ = "0.1.0"

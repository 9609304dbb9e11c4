"""Experiment orchestration.

Config-driven dataset generation, repeated fits across algorithms and
seeds, aggregation into benchmark tables, and result/file I/O.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import metrics as _metrics
from .baselines import gmm_em, kmeans
from .elliptic import NOISE, SetupSpec, generate_setup, setup_from_dict
from .fem import FitConfig, fit

SCHEMA_VERSION = 1
KNOWN_ALGORITHMS = ("fem", "fem1", "fem2", "fem3", "fem4", "gmm", "kmeans")
KNOWN_METRICS = ("ari", "ami", "accuracy", "mu_error", "sigma_error")


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run: a data source, algorithms, repetitions and metrics.

    ``algorithms`` entries are ``"fem"`` (same as ``"fem1"``), ``"fem2"``..
    ``"fem4"``, ``"gmm"`` or ``"kmeans"``.  ``monitor`` turns on the
    log-likelihood trace for the EM algorithms (``"gaussian"`` or
    ``"student_t"`` with ``monitor_dof``).
    """

    setup: SetupSpec | None = None
    data: str | None = None
    k: int | None = None
    algorithms: tuple[str, ...] = ("fem", "gmm")
    nrep: int = 50
    base_seed: int = 0
    metrics: tuple[str, ...] = ("ari", "ami", "accuracy", "mu_error", "sigma_error")
    output: str | None = None
    monitor: str | None = None
    monitor_dof: tuple[float, ...] | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.nrep < 1:
            raise ValueError("nrep must be >= 1")
        if not self.algorithms:
            raise ValueError("algorithms must be nonempty")
        for a in self.algorithms:
            if a not in KNOWN_ALGORITHMS:
                raise ValueError(
                    f"algorithms: unknown entry {a!r} (choose from {KNOWN_ALGORITHMS})")
        for m in self.metrics:
            if m not in KNOWN_METRICS:
                raise ValueError(
                    f"metrics: unknown entry {m!r} (choose from {KNOWN_METRICS})")
        if self.setup is None and self.data is None:
            raise ValueError("either a setup or a data path is required")
        if self.setup is None and self.k is None:
            raise ValueError("k is required when fitting external data")


@dataclass
class ExperimentResult:
    records: list[dict]
    aggregates: dict
    loglik_rows: list[dict] = field(default_factory=list)
    failures: int = 0


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from documented config keys.

    Top-level keys: ``algorithms``, ``nrep``, ``base_seed``, ``metrics``,
    ``output``, ``monitor``, ``monitor_dof``, ``jobs``, ``k``, ``data`` and
    either ``setup = <1..5>`` or a ``[setup]`` table (see
    ``elliptic.setup_from_dict``).
    """
    d = dict(d)
    setup = None
    if "setup" in d:
        raw = d.pop("setup")
        setup = setup_from_dict(raw if isinstance(raw, dict) else {"setup": raw})
    known = {"data", "k", "algorithms", "nrep", "base_seed", "metrics",
             "output", "monitor", "monitor_dof", "jobs"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"config: unknown keys {sorted(unknown)}")
    kwargs: dict = {"setup": setup}
    for key in known:
        if key in d:
            kwargs[key] = d[key]
    for key in ("algorithms", "metrics"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "monitor_dof" in kwargs and kwargs["monitor_dof"] is not None:
        kwargs["monitor_dof"] = tuple(float(v) for v in kwargs["monitor_dof"])
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    """Read a TOML (or JSON) experiment config file."""
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        raw = json.loads(text)
    else:
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(text.decode())
    return config_from_dict(raw)


def load_csv(path, has_labels: bool = False) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a numeric CSV; optionally split off a final integer label column.

    A non-numeric first line is treated as a header.  Ragged rows,
    non-numeric cells and non-finite values are rejected with row-level
    messages.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty file")

    start = 0
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        start = 1
        if len(rows) == 1:
            raise ValueError(f"{path}: no data rows below the header") from None

    width = len(rows[start])
    data = []
    for idx, row in enumerate(rows[start:], start=1):
        if len(row) != width:
            raise ValueError(f"{path}: row {idx}: expected {width} fields, got {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise ValueError(f"{path}: row {idx}: non-numeric cell ({exc})") from None
    X = np.asarray(data, dtype=float)
    labels = None
    if has_labels:
        if X.shape[1] < 2:
            raise ValueError(f"{path}: need at least one feature column plus labels")
        labels = X[:, -1]
        if not np.all(labels == np.round(labels)):
            raise ValueError(f"{path}: label column contains non-integer values")
        labels = labels.astype(int)
        X = X[:, :-1]
    if not np.all(np.isfinite(X)):
        bad = int(np.argwhere(~np.isfinite(X))[0][0]) + 1
        raise ValueError(f"{path}: row {bad}: non-finite value")
    return X, labels


def _run_algorithm(name: str, X: np.ndarray, k: int, seed: int,
                   monitor: str | None, monitor_dof) -> tuple[np.ndarray, object]:
    if name == "kmeans":
        res = kmeans(X, k, seed=seed)
        return res.labels, res
    cfg = FitConfig(seed=seed, likelihood_monitor=monitor, monitor_dof=monitor_dof)
    if name == "gmm":
        report = gmm_em(X, k, cfg)
    else:
        version = 1 if name == "fem" else int(name[3:])
        report = fit(X, k, FitConfig(version=version, seed=seed,
                                     likelihood_monitor=monitor,
                                     monitor_dof=monitor_dof))
    return report.labels, report


def _one_repetition(cfg: ExperimentConfig, rep: int,
                    external: tuple[np.ndarray, np.ndarray | None] | None
                    ) -> tuple[list[dict], list[dict]]:
    seed = cfg.base_seed ^ rep
    if external is not None:
        X, y = external
        truth = None
    else:
        sample = generate_setup(cfg.setup, np.random.default_rng(seed))
        X, y, truth = sample.data, sample.labels, sample.truth
    k = cfg.k if cfg.k is not None else cfg.setup.n_clusters
    has_noise = y is not None and np.any(y == NOISE)

    records: list[dict] = []
    loglik_rows: list[dict] = []
    for algo in cfg.algorithms:
        record: dict = {"rep": rep, "seed": seed, "algorithm": algo,
                        "failed": False, "error": ""}
        t0 = time.perf_counter()
        try:
            labels, report = _run_algorithm(algo, X, k, seed, cfg.monitor,
                                            cfg.monitor_dof)
        except Exception as exc:  # noqa: BLE001 - recorded, batch continues
            record["failed"] = True
            record["error"] = f"{type(exc).__name__}: {exc}"
            record["runtime_s"] = time.perf_counter() - t0
            records.append(record)
            continue
        record["runtime_s"] = time.perf_counter() - t0
        if hasattr(report, "em_iters"):
            record["em_iters"] = report.em_iters
            record["converged"] = report.converged

        if y is not None:
            for name in cfg.metrics:
                if name == "ari":
                    record["ari"] = _metrics.ari(y, labels)
                    if has_noise:
                        record["ari_nonoise"] = _metrics.ari(y, labels, exclude_noise=True)
                elif name == "ami":
                    record["ami"] = _metrics.ami(y, labels)
                    if has_noise:
                        record["ami_nonoise"] = _metrics.ami(y, labels, exclude_noise=True)
                elif name == "accuracy":
                    record["accuracy"] = _metrics.accuracy(labels, y)
                    if has_noise:
                        record["accuracy_nonoise"] = _metrics.accuracy(
                            labels, y, exclude_noise=True)
        if truth is not None and ("mu_error" in cfg.metrics
                                  or "sigma_error" in cfg.metrics):
            est_model = getattr(report, "model", None)
            centers = est_model.mu if est_model is not None else report.centers
            perm = _metrics.match_clusters(None, None, y, labels)
            for t in range(k):
                j = int(perm[t])
                if "mu_error" in cfg.metrics:
                    record[f"mu_error_{t + 1}"] = _metrics.mu_error(
                        truth.mu[t], centers[j])
                if "sigma_error" in cfg.metrics and est_model is not None:
                    record[f"sigma_error_{t + 1}"] = _metrics.sigma_error(
                        truth.sigma[t], est_model.sigma[j])
        records.append(record)

        trace = getattr(report, "loglik_trace", None)
        if trace:
            for i, value in enumerate(trace, start=1):
                loglik_rows.append({"rep": rep, "algorithm": algo,
                                    "iteration": i, "loglik": value})
    return records, loglik_rows


def aggregate_records(records: list[dict]) -> dict:
    """Per-algorithm mean/std/median/count for every numeric record field."""
    by_algo: dict[str, dict] = {}
    algos = sorted({r["algorithm"] for r in records})
    for algo in algos:
        # fixed reduction order makes the aggregates independent of
        # repetition execution order
        rows = sorted((r for r in records
                       if r["algorithm"] == algo and not r["failed"]),
                      key=lambda r: r.get("rep", 0))
        fields = sorted({key for r in rows for key, v in r.items()
                         if isinstance(v, (int, float)) and not isinstance(v, bool)
                         and key not in ("rep", "seed")})
        stats = {}
        for name in fields:
            values = np.array([r[name] for r in rows if name in r], dtype=float)
            if values.size == 0:
                continue
            stats[name] = {
                "mean": float(values.mean()),
                "std": float(values.std(ddof=1)) if values.size > 1 else 0.0,
                "median": float(np.median(values)),
                "count": int(values.size),
            }
        stats["failures"] = sum(1 for r in records
                                if r["algorithm"] == algo and r["failed"])
        by_algo[algo] = stats
    return {"schema": SCHEMA_VERSION, "algorithms": by_algo}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every repetition x algorithm cell and aggregate the records.

    Repetition ``r`` derives its seed as ``base_seed XOR r``; failures are
    recorded per repetition without aborting the batch.
    """
    external = None
    if cfg.data is not None:
        external = load_csv(cfg.data, has_labels=True)

    reps = range(cfg.nrep)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_one_repetition, [cfg] * cfg.nrep, reps,
                                     [external] * cfg.nrep))
    else:
        outcomes = [_one_repetition(cfg, r, external) for r in reps]

    records: list[dict] = []
    loglik_rows: list[dict] = []
    for recs, lls in outcomes:
        records.extend(recs)
        loglik_rows.extend(lls)
    records.sort(key=lambda r: (r["rep"], r["algorithm"]))
    loglik_rows.sort(key=lambda r: (r["rep"], r["algorithm"], r["iteration"]))
    aggregates = aggregate_records(records)
    aggregates["nrep"] = cfg.nrep
    failures = sum(1 for r in records if r["failed"])
    return ExperimentResult(records=records, aggregates=aggregates,
                            loglik_rows=loglik_rows, failures=failures)


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def emit_results(result: ExperimentResult, prefix: str) -> list[str]:
    """Write ``<prefix>_records.csv``, ``<prefix>_summary.json`` and
    ``<prefix>_loglik.csv``; returns the written paths."""
    paths = []
    fieldnames: list[str] = []
    for record in result.records:
        for key in record:
            if key not in fieldnames:
                fieldnames.append(key)

    records_path = f"{prefix}_records.csv"
    with open(records_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, restval="")
        writer.writeheader()
        for record in result.records:
            writer.writerow({k: _format_cell(v) for k, v in record.items()})
    paths.append(records_path)

    summary_path = f"{prefix}_summary.json"
    with open(summary_path, "w") as fh:
        json.dump(result.aggregates, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(summary_path)

    loglik_path = f"{prefix}_loglik.csv"
    with open(loglik_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["rep", "algorithm", "iteration", "loglik"])
        writer.writeheader()
        for row in result.loglik_rows:
            writer.writerow({k: _format_cell(v) for k, v in row.items()})
    paths.append(loglik_path)
    return paths


def read_records_csv(path) -> list[dict]:
    """Read back a records CSV with the original field types."""
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            record: dict = {}
            for key, raw in row.items():
                if raw == "":
                    continue
                if key in ("rep", "seed", "em_iters"):
                    record[key] = int(raw)
                elif key in ("failed", "converged"):
                    record[key] = bool(int(raw))
                elif key in ("algorithm", "error"):
                    record[key] = raw
                else:
                    record[key] = float(raw)
            records.append(record)
    return records

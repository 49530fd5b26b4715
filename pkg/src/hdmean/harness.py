"""Monte Carlo engine for empirical size, power and null-distribution checks.

Every replication draws from its own stream,
``SeedSequence(master_seed, spawn_key=(cell, 1, rep))``, so the outcome of a
cell does not depend on how replications are spread over worker processes.
Design-level draws (a fixed random Sigma or a fixed mean support, and the
theoretical power overlay) use ``spawn_key=(cell, 0)``.  Power curves reuse
the same streams at every signal strength (common random numbers).
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .competitors import bs_one_sample_test, cq_one_sample_test, cq_two_sample_test, sd_one_sample_test
from .datagen import (
    CovarianceSpec,
    InnovationSpec,
    MeanSpec,
    covariance_matrix,
    generate_sample,
    make_factor,
    sparse_mean,
    tr_sigma2_exact,
)
from .errors import ConfigError, DegenerateDataError, HDMeanError
from .one_sample import (
    PopulationDescriptor,
    _outcome_from_pairs,
    _sample_variance,
    pair_degrees_of_freedom,
    theoretical_power_one,
)
from .special import chi_square_cdf, t_cdf
from .two_sample import TwoSamplePopulationDescriptor, theoretical_power_two, two_sample_test
from ._matrix import gram, upper_pairs

__all__ = [
    "SCENARIOS",
    "SimConfig",
    "MethodRate",
    "SimOutcome",
    "NullStatistics",
    "KSResult",
    "SimulationError",
    "ks_distance",
    "kolmogorov_sf",
    "run_size_experiment",
    "run_power_experiment",
    "collect_null_statistics",
]

SCENARIOS = (
    "one_sample_size",
    "one_sample_power",
    "two_sample_size",
    "two_sample_power",
    "null_histogram",
)
ONE_SAMPLE_METHODS = ("New", "CQ", "BS", "SD")
TWO_SAMPLE_METHODS = ("New", "CQ")
MIN_N = {"New": 3, "CQ": 4, "BS": 3, "SD": 4}


class SimulationError(HDMeanError):
    """A replication failed and the cell was aborted."""


def canonical_method(name):
    for method in ONE_SAMPLE_METHODS:
        if name.lower() == method.lower():
            return method
    raise ConfigError(f"unknown method {name!r}; expected one of {ONE_SAMPLE_METHODS}")


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo cell.

    ``n`` is the (first) sample size; ``n2`` is set for two-sample scenarios.
    ``mean`` describes the sparse signal for power scenarios and is ignored
    (forced to zero) for size scenarios.  ``cell`` enters the seed derivation
    so cells of one campaign use distinct streams.
    """

    scenario: str
    methods: tuple = ("New",)
    cov: CovarianceSpec = field(default_factory=CovarianceSpec.ar1)
    innov: InnovationSpec = field(default_factory=InnovationSpec)
    p: int = 200
    n: int = 4
    n2: int = None
    mean: MeanSpec = None
    reps: int = 1000
    alpha: float = 0.05
    master_seed: int = 0
    cell: int = 0
    redraw_sigma: bool = True
    redraw_mean: bool = True
    on_failure: str = "abort"

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(canonical_method(m) for m in self.methods))
        if self.scenario.endswith("_size") and self.mean is not None:
            object.__setattr__(self, "mean", None)

    @property
    def two_sample(self):
        return self.scenario.startswith("two_sample") or (
            self.scenario == "null_histogram" and self.n2 is not None
        )

    @property
    def n1_effective(self):
        return min(self.n, self.n2) if self.two_sample else self.n

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError(f"duplicate methods in {self.methods}")
        if self.reps < 1:
            raise ConfigError(f"reps must be at least 1, got {self.reps}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.p < 1:
            raise ConfigError(f"p must be positive, got {self.p}")
        if self.cov.kind == "sparse" and self.p < self.cov.nonzeros_per_row:
            raise ConfigError(f"the sparse covariance model needs p >= 4, got p={self.p}")
        if self.on_failure not in ("abort", "count"):
            raise ConfigError(f"on_failure must be 'abort' or 'count', got {self.on_failure!r}")
        if self.scenario.startswith("two_sample") and self.n2 is None:
            raise ConfigError(f"scenario {self.scenario} needs n2")
        if self.two_sample:
            bad = [m for m in self.methods if m not in TWO_SAMPLE_METHODS]
            if bad:
                raise ConfigError(f"method {bad[0]} has no two-sample version; use {TWO_SAMPLE_METHODS}")
        if self.scenario == "null_histogram" and self.methods != ("New",):
            raise ConfigError("the null_histogram scenario only collects statistics of method New")
        if self.scenario.endswith("_power") and self.mean is None:
            raise ConfigError(f"scenario {self.scenario} needs mean settings (beta, r)")
        if self.mean is not None and self.mean.p != self.p:
            raise ConfigError(f"mean settings have p={self.mean.p}, config has p={self.p}")
        n_small = self.n1_effective
        for method in self.methods:
            if n_small < MIN_N[method]:
                raise ConfigError(
                    f"method {method} needs n >= {MIN_N[method]}, config has n={n_small}"
                )
        return self

    def label(self):
        parts = [f"p={self.p}", f"n={self.n}"]
        if self.n2 is not None:
            parts.append(f"n2={self.n2}")
        if self.mean is not None:
            parts.append(f"r={self.mean.r:g}")
        return " ".join(parts)

    def to_dict(self):
        out = {
            "scenario": self.scenario,
            "methods": list(self.methods),
            "covariance": self.cov.label(),
            "innovation": self.innov.kind,
            "p": self.p,
            "n": self.n,
            "n2": self.n2,
            "reps": self.reps,
            "alpha": self.alpha,
            "seed": self.master_seed,
            "cell": self.cell,
        }
        if self.mean is not None:
            out["beta"] = self.mean.beta
            out["r"] = self.mean.r
        return out


@dataclass(frozen=True)
class MethodRate:
    method: str
    rejections: int
    successes: int
    reps_failed: int

    @property
    def rate(self):
        return self.rejections / self.successes if self.successes else math.nan

    @property
    def mc_stderr(self):
        if not self.successes:
            return math.nan
        rate = self.rate
        return math.sqrt(rate * (1.0 - rate) / self.successes)

    def to_dict(self):
        return {
            "rate": self.rate,
            "mc_stderr": self.mc_stderr,
            "rejections": self.rejections,
            "successes": self.successes,
            "reps_failed": self.reps_failed,
        }


@dataclass
class SimOutcome:
    config: SimConfig
    rates: dict
    runtime: float
    theory: float = None

    def rate(self, method):
        return self.rates[method].rate

    def to_dict(self, include_runtime=False):
        out = {
            "config": self.config.to_dict(),
            "methods": {m: r.to_dict() for m, r in self.rates.items()},
        }
        if self.theory is not None:
            out["theoretical_power"] = self.theory
        if include_runtime:
            out["runtime"] = self.runtime
        return out


class KSResult(NamedTuple):
    distance: float
    p_value: float


@dataclass
class NullStatistics:
    config: SimConfig
    df: int
    t_stats: np.ndarray
    ks: KSResult
    chi2_stats: np.ndarray = None
    chi2_ks: KSResult = None
    runtime: float = 0.0

    def to_dict(self):
        out = {
            "config": self.config.to_dict(),
            "df": self.df,
            "ks_distance": self.ks.distance,
            "ks_p_value": self.ks.p_value,
        }
        if self.chi2_ks is not None:
            out["chi2_ks_distance"] = self.chi2_ks.distance
            out["chi2_ks_p_value"] = self.chi2_ks.p_value
        return out


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------


def kolmogorov_sf(lam):
    """Survival function of the Kolmogorov limit distribution."""
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        y = math.exp(-(math.pi**2) / (8.0 * lam * lam))
        cdf = math.sqrt(2.0 * math.pi) / lam * (y + y**9 + y**25 + y**49)
        return min(1.0, max(0.0, 1.0 - cdf))
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < 1e-17:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_distance(sample, cdf):
    """Sup distance between the empirical CDF of ``sample`` and ``cdf``.

    The p-value is asymptotic (Kolmogorov), with Stephens' small-sample
    correction of the scaling.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    m = x.size
    if m == 0:
        raise ValueError("ks_distance needs a nonempty sample")
    F = np.array([cdf(v) for v in x])
    i = np.arange(1, m + 1)
    d = max(float(np.max(i / m - F)), float(np.max(F - (i - 1) / m)))
    root = math.sqrt(m)
    return KSResult(d, kolmogorov_sf((root + 0.12 + 0.11 / root) * d))


# ---------------------------------------------------------------------------
# replication engine
# ---------------------------------------------------------------------------


def _rep_rng(config, rep):
    return np.random.default_rng(np.random.SeedSequence(config.master_seed, spawn_key=(config.cell, 1, rep)))


def _design_rng(config):
    return np.random.default_rng(np.random.SeedSequence(config.master_seed, spawn_key=(config.cell, 0)))


@dataclass
class _Design:
    factor: object
    mean: np.ndarray


def _make_design(config):
    rng = _design_rng(config)
    factor = make_factor(config.cov, config.p, rng)
    mean = sparse_mean(config.mean, rng) if config.mean is not None else np.zeros(config.p)
    return _Design(factor, mean)


def _draw(config, design, rng):
    if config.cov.is_random and config.redraw_sigma:
        factor = make_factor(config.cov, config.p, rng)
    else:
        factor = design.factor
    if config.mean is None:
        mu = np.zeros(config.p)
    elif config.redraw_mean:
        mu = sparse_mean(config.mean, rng)
    else:
        mu = design.mean
    if not config.two_sample:
        return factor, generate_sample(mu, factor, config.innov, config.n, rng), None
    X1 = generate_sample(mu, factor, config.innov, config.n, rng)
    X2 = generate_sample(np.zeros(config.p), factor, config.innov, config.n2, rng)
    return factor, X1, X2


_ONE = {
    "CQ": cq_one_sample_test,
    "BS": bs_one_sample_test,
    "SD": sd_one_sample_test,
}


def _apply(method, X1, X2, alpha):
    if X2 is not None:
        if method == "New":
            out = two_sample_test(X1, X2, alpha)
            return out.t_stat, out.reject
        out = cq_two_sample_test(X1, X2, alpha)
        return out.statistic, out.reject
    if method == "New":
        n, p = X1.shape
        out = _outcome_from_pairs(upper_pairs(gram(X1)), alpha, n, p)
        return out.t_stat, out.reject
    out = _ONE[method](X1, alpha)
    return out.statistic, out.reject


def _run_chunk(config, design, start, stop, want_chi2):
    """Replications ``start..stop-1``; returns arrays ordered by replication."""
    reps = stop - start
    k = len(config.methods)
    stats = np.full((reps, k), np.nan)
    rejects = np.zeros((reps, k), dtype=bool)
    failed = np.zeros((reps, k), dtype=bool)
    errors = []
    chi2 = np.full(reps, np.nan) if want_chi2 else None
    for idx, rep in enumerate(range(start, stop)):
        rng = _rep_rng(config, rep)
        factor, X1, X2 = _draw(config, design, rng)
        for j, method in enumerate(config.methods):
            try:
                stats[idx, j], rejects[idx, j] = _apply(method, X1, X2, config.alpha)
            except DegenerateDataError as exc:
                failed[idx, j] = True
                errors.append((rep, method, str(exc)))
        if want_chi2:
            tr_hat = _sample_variance(upper_pairs(gram(X1)))[1]
            chi2[idx] = pair_degrees_of_freedom(config.n) * tr_hat / tr_sigma2_exact(config.cov, config.p, factor)
    return stats, rejects, failed, errors, chi2


def _chunks(reps, workers):
    size = math.ceil(reps / workers)
    return [(s, min(reps, s + size)) for s in range(0, reps, size)]


def _run_cell(config, workers=1, want_chi2=False):
    config.validate()
    design = _make_design(config)
    workers = max(1, min(int(workers), config.reps))
    if workers == 1:
        parts = [_run_chunk(config, design, 0, config.reps, want_chi2)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chunk, config, design, a, b, want_chi2)
                for a, b in _chunks(config.reps, workers)
            ]
            parts = [f.result() for f in futures]
    stats = np.concatenate([p[0] for p in parts])
    rejects = np.concatenate([p[1] for p in parts])
    failed = np.concatenate([p[2] for p in parts])
    errors = [e for p in parts for e in p[3]]
    chi2 = np.concatenate([p[4] for p in parts]) if want_chi2 else None
    if errors and config.on_failure == "abort":
        rep, method, msg = errors[0]
        raise SimulationError(
            f"cell [{config.label()}] aborted: replication {rep}, method {method}: {msg} "
            f"({len(errors)} failed evaluations in total)"
        )
    return design, stats, rejects, failed, chi2


def _rates(config, rejects, failed):
    rates = {}
    for j, method in enumerate(config.methods):
        ok = ~failed[:, j]
        rates[method] = MethodRate(
            method=method,
            rejections=int(np.count_nonzero(rejects[ok, j])),
            successes=int(np.count_nonzero(ok)),
            reps_failed=int(np.count_nonzero(failed[:, j])),
        )
    return rates


def run_size_experiment(config, workers=1):
    """Empirical rejection rates under H0 for every configured method."""
    if not config.scenario.endswith("_size"):
        raise ConfigError(f"run_size_experiment needs a size scenario, got {config.scenario}")
    start = time.perf_counter()
    _, _, rejects, failed, _ = _run_cell(config, workers)
    return SimOutcome(config, _rates(config, rejects, failed), time.perf_counter() - start)


def _theory(config, design):
    if "New" not in config.methods:
        return None
    sigma = covariance_matrix(config.cov, config.p, design.factor)
    if config.two_sample:
        pop = TwoSamplePopulationDescriptor.from_moments(
            design.mean, np.zeros(config.p), sigma, sigma, config.n, config.n2
        )
        return theoretical_power_two(pop, config.alpha)
    pop = PopulationDescriptor.from_moments(design.mean, sigma, config.n)
    return theoretical_power_one(pop, config.alpha)


def run_power_experiment(config, r_grid, workers=1):
    """Empirical power at each signal strength in ``r_grid``.

    Each outcome carries the asymptotic power of the proposed test, evaluated
    at the design-stream draw of the mean support (and of Sigma for the
    random sparse model).
    """
    if not config.scenario.endswith("_power"):
        raise ConfigError(f"run_power_experiment needs a power scenario, got {config.scenario}")
    if config.mean is None:
        raise ConfigError("power scenarios need mean settings")
    outcomes = []
    for r in r_grid:
        cell = replace(config, mean=replace(config.mean, r=float(r)))
        start = time.perf_counter()
        design, _, rejects, failed, _ = _run_cell(cell, workers)
        outcomes.append(
            SimOutcome(cell, _rates(cell, rejects, failed), time.perf_counter() - start, _theory(cell, design))
        )
    return outcomes


def collect_null_statistics(config, workers=1):
    """Null t-statistics of the proposed test with a KS check against t(k).

    For one-sample cells the scaled variance estimates ``k trhat / tr(Sigma^2)``
    are returned as well, with a KS check against chi-square(k).
    """
    if config.scenario != "null_histogram":
        raise ConfigError(f"collect_null_statistics needs the null_histogram scenario, got {config.scenario}")
    config = replace(config, mean=None)
    start = time.perf_counter()
    want_chi2 = not config.two_sample
    _, stats, _, failed, chi2 = _run_cell(config, workers, want_chi2)
    t_stats = stats[~failed[:, 0], 0]
    df = pair_degrees_of_freedom(config.n1_effective)
    result = NullStatistics(
        config=config,
        df=df,
        t_stats=t_stats,
        ks=ks_distance(t_stats, lambda x: t_cdf(x, df)),
    )
    if want_chi2:
        result.chi2_stats = chi2
        result.chi2_ks = ks_distance(chi2, lambda x: chi_square_cdf(x, df))
    result.runtime = time.perf_counter() - start
    return result

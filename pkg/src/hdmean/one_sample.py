"""One-sample t-test for a high-dimensional mean vector with fixed, small n.

The statistic is the U-statistic ``U_n = mean_{i<j} X_i'X_j``, which is
unbiased for ``||mu||^2``.  Its null variance ``2 tr(Sigma^2) / (n(n-1))`` is
estimated from the sample variance of the ``n(n-1)/2`` pairwise inner
products, and ``U_n / sigma_hat`` is referred to a t distribution with
``k = n(n-1)/2 - 1`` degrees of freedom.  Only dimension has to be large;
``n >= 3`` is enough.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._matrix import as_sample_matrix, fsum, gram, upper_pairs
from .errors import DegenerateDataError, InsufficientSampleError
from .special import normal_cdf, t_sf, t_upper_quantile

__all__ = [
    "OneSampleOutcome",
    "PopulationDescriptor",
    "pairwise_inner_products",
    "u_statistic",
    "estimate_tr_sigma2",
    "one_sample_test",
    "snr_one",
    "theoretical_power_one",
    "c1_ratio",
    "pair_degrees_of_freedom",
]

# relative spread below which the pairwise products count as identical
_DEGENERATE_RTOL = 64 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class OneSampleOutcome:
    u_stat: float
    tr_sigma2_hat: float
    sigma_hat0: float
    t_stat: float
    df: int
    p_value: float
    reject: bool
    alpha: float
    n: int
    p: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PopulationDescriptor:
    """Population quantities that drive the power of the one-sample test.

    Attributes
    ----------
    tr_sigma2 : float
        ``tr(Sigma^2)``.
    mu_sq_norm : float
        ``||mu||^2``.
    mu_sigma_mu : float
        ``mu' Sigma mu``.
    n : int
        Sample size.
    """

    tr_sigma2: float
    mu_sq_norm: float
    mu_sigma_mu: float
    n: int

    def __post_init__(self):
        if self.mu_sq_norm < 0 or self.mu_sigma_mu < 0:
            raise ValueError("quadratic forms must be nonnegative")

    @classmethod
    def from_moments(cls, mu, sigma, n):
        mu = np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        return cls(
            tr_sigma2=float(np.sum(sigma * sigma)),
            mu_sq_norm=float(mu @ mu),
            mu_sigma_mu=float(mu @ sigma @ mu),
            n=int(n),
        )


def pair_degrees_of_freedom(n):
    """``k = n(n-1)/2 - 1``."""
    return n * (n - 1) // 2 - 1


def _pairs(X, min_n, what):
    X = as_sample_matrix(X)
    n = X.shape[0]
    if n < min_n:
        raise InsufficientSampleError(f"{what} needs at least {min_n} observations, got n={n}")
    return X, upper_pairs(gram(X))


def pairwise_inner_products(X):
    """All ``X_i' X_j`` with ``i < j``, in lexicographic ``(i, j)`` order."""
    return _pairs(X, 2, "pairwise_inner_products")[1]


def u_statistic(X):
    """``U_n = 2/(n(n-1)) * sum_{i<j} X_i' X_j``."""
    values = pairwise_inner_products(X)
    return fsum(values) / values.size


def _sample_variance(values):
    """Sample variance (divisor ``m - 1``) of the pairwise products.

    Raises DegenerateDataError when all values coincide.
    """
    m = values.size
    mean = fsum(values) / m
    var = fsum((values - mean) ** 2) / (m - 1)
    scale = float(np.max(np.abs(values)))
    if var <= (_DEGENERATE_RTOL * scale) ** 2:
        raise DegenerateDataError(
            "all pairwise inner products are identical; the variance estimate is zero"
        )
    return mean, var


def estimate_tr_sigma2(X):
    """Sample variance of the pairwise inner products, an estimate of tr(Sigma^2)."""
    values = _pairs(X, 3, "estimate_tr_sigma2")[1]
    return _sample_variance(values)[1]


def _outcome_from_pairs(values, alpha, n, p):
    u_stat, tr_hat = _sample_variance(values)
    df = pair_degrees_of_freedom(n)
    sigma_hat0 = math.sqrt(2.0 * tr_hat / (n * (n - 1)))
    t_stat = u_stat / sigma_hat0
    return OneSampleOutcome(
        u_stat=u_stat,
        tr_sigma2_hat=tr_hat,
        sigma_hat0=sigma_hat0,
        t_stat=t_stat,
        df=df,
        p_value=t_sf(t_stat, df),
        reject=bool(t_stat >= t_upper_quantile(alpha, df)),
        alpha=alpha,
        n=n,
        p=p,
    )


def one_sample_test(X, alpha=0.05):
    """Test ``H0: mu = 0`` against ``H1: mu != 0`` (upper-tail decision).

    Parameters
    ----------
    X : array_like, shape (n, p)
        Observations in rows; ``n >= 3``.
    alpha : float
        Nominal level.

    Returns
    -------
    OneSampleOutcome
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    X, values = _pairs(X, 3, "the one-sample test")
    n, p = X.shape
    return _outcome_from_pairs(values, alpha, n, p)


def snr_one(pop):
    if pop.tr_sigma2 <= 0:
        raise ValueError("tr(Sigma^2) must be positive")
    if pop.n < 2:
        raise InsufficientSampleError("SNR needs n >= 2")
    n = pop.n
    return math.sqrt(n * (n - 1)) * pop.mu_sq_norm / math.sqrt(
        2.0 * pop.tr_sigma2 + 4.0 * (n - 1) * pop.mu_sigma_mu
    )


def theoretical_power_one(pop, alpha=0.05):
    """Asymptotic power ``1 - Phi(rho * t_alpha(k) - SNR)``.

    ``rho`` stands in for the random ratio ``sigma_hat0 / sigma_n``; it is
    frozen at ``sqrt(E sigma_hat0^2) / sigma_n`` with
    ``E sigma_hat0^2 = 2 tr(Sigma^2)/(n(n-1)) + 4 mu'Sigma mu/(n(n+1))``.
    This is an approximation, not an exact finite-sample power.
    """
    snr = snr_one(pop)
    n = pop.n
    if n < 3:
        raise InsufficientSampleError("power needs n >= 3")
    base = 2.0 * pop.tr_sigma2 / (n * (n - 1))
    expected_sq = base + 4.0 * pop.mu_sigma_mu / (n * (n + 1))
    sigma_n_sq = base + 4.0 * pop.mu_sigma_mu / n
    rho = math.sqrt(expected_sq / sigma_n_sq)
    crit = t_upper_quantile(alpha, pair_degrees_of_freedom(n))
    return 1.0 - normal_cdf(rho * crit - snr)


def c1_ratio(tr_sigma4, tr_sigma2):
    """``tr(Sigma^4) / tr(Sigma^2)^2``; small values mean the t limit is reliable."""
    if tr_sigma4 <= 0 or tr_sigma2 <= 0:
        raise ValueError("traces must be positive")
    return tr_sigma4 / (tr_sigma2 * tr_sigma2)

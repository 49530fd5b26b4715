"""Two-sample t-test for high-dimensional means with small, unequal sizes.

Unequal samples are first recombined by Scheffe's transformation into
``n1`` difference vectors ``Y_i`` whose mean is exactly ``Xbar1 - Xbar2``;
the one-sample machinery is then applied to the ``Y_i``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._matrix import as_sample_matrix, gram, upper_pairs
from .errors import InsufficientSampleError, ShapeError
from .one_sample import _sample_variance, pair_degrees_of_freedom, u_statistic
from .special import normal_cdf, t_sf, t_upper_quantile

__all__ = [
    "TwoSampleOutcome",
    "TwoSamplePopulationDescriptor",
    "scheffe_transform",
    "v_statistic",
    "two_sample_test",
    "snr_two",
    "theoretical_power_two",
    "c2_ratio",
]


@dataclass(frozen=True)
class TwoSampleOutcome:
    v_stat: float
    sigma_yy_hat: float
    sigma_hat0: float
    t_stat: float
    df: int
    p_value: float
    reject: bool
    alpha: float
    swapped: bool
    n1: int
    n2: int
    p: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TwoSamplePopulationDescriptor:
    """Power ingredients with ``M = Sigma1 + (n1/n2) Sigma2`` and ``d = mu1 - mu2``.

    ``tr_mix2 = tr(M^2)``, ``diff_sq_norm = ||d||^2``, ``diff_mix_diff = d'Md``.
    """

    tr_mix2: float
    diff_sq_norm: float
    diff_mix_diff: float
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 > self.n2:
            raise ValueError("the descriptor expects n1 <= n2")
        if self.diff_sq_norm < 0 or self.diff_mix_diff < 0:
            raise ValueError("quadratic forms must be nonnegative")

    @classmethod
    def from_moments(cls, mu1, mu2, sigma1, sigma2, n1, n2):
        if n1 > n2:
            mu1, mu2, sigma1, sigma2, n1, n2 = mu2, mu1, sigma2, sigma1, n2, n1
        d = np.asarray(mu1, dtype=float) - np.asarray(mu2, dtype=float)
        mix = np.asarray(sigma1, dtype=float) + (n1 / n2) * np.asarray(sigma2, dtype=float)
        return cls(
            tr_mix2=float(np.sum(mix * mix)),
            diff_sq_norm=float(d @ d),
            diff_mix_diff=float(d @ mix @ d),
            n1=int(n1),
            n2=int(n2),
        )


def _check_pair(X1, X2):
    X1 = as_sample_matrix(X1, "X1")
    X2 = as_sample_matrix(X2, "X2")
    if X1.shape[1] != X2.shape[1]:
        raise ShapeError(
            f"samples must share the dimension: X1 has {X1.shape[1]} columns, X2 has {X2.shape[1]}"
        )
    return X1, X2


def scheffe_transform(X1, X2):
    """Scheffe's recombination of two samples with ``n1 <= n2`` into n1 rows.

    ``Y_i = X1_i - sqrt(n1/n2) X2_i + sum_{j<=n1} X2_j / sqrt(n1 n2) - mean(X2)``
    """
    X1, X2 = _check_pair(X1, X2)
    n1, n2 = X1.shape[0], X2.shape[0]
    if n1 > n2:
        raise ValueError(f"scheffe_transform needs n1 <= n2, got n1={n1}, n2={n2}; swap the samples")
    if n1 == n2:
        return X1 - X2
    head = X2[:n1]
    shift = head.sum(axis=0) / math.sqrt(n1 * n2) - X2.sum(axis=0) / n2
    return X1 - math.sqrt(n1 / n2) * head + shift


def v_statistic(X1, X2):
    """U-statistic of the Scheffe-transformed rows; unbiased for ||mu1 - mu2||^2."""
    return u_statistic(scheffe_transform(X1, X2))


def two_sample_test(X1, X2, alpha=0.05):
    """Test ``H0: mu1 = mu2`` (upper-tail decision on the V-statistic ratio).

    The smaller sample always plays the ``n1`` role; ``swapped`` records
    whether the inputs had to be exchanged for that.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    X1, X2 = _check_pair(X1, X2)
    swapped = X1.shape[0] > X2.shape[0]
    if swapped:
        X1, X2 = X2, X1
    n1, n2 = X1.shape[0], X2.shape[0]
    if n1 < 3:
        raise InsufficientSampleError(
            f"the two-sample test needs at least 3 observations in each sample, got {n1} and {n2}"
        )
    values = upper_pairs(gram(scheffe_transform(X1, X2)))
    v_stat, sigma_yy = _sample_variance(values)
    df = pair_degrees_of_freedom(n1)
    sigma_hat0 = math.sqrt(2.0 * sigma_yy / (n1 * (n1 - 1)))
    t_stat = v_stat / sigma_hat0
    return TwoSampleOutcome(
        v_stat=v_stat,
        sigma_yy_hat=sigma_yy,
        sigma_hat0=sigma_hat0,
        t_stat=t_stat,
        df=df,
        p_value=t_sf(t_stat, df),
        reject=bool(t_stat >= t_upper_quantile(alpha, df)),
        alpha=alpha,
        swapped=swapped,
        n1=n1,
        n2=n2,
        p=X1.shape[1],
    )


def snr_two(pop):
    if pop.tr_mix2 <= 0:
        raise ValueError("tr(M^2) must be positive")
    if pop.n1 < 2:
        raise InsufficientSampleError("SNR needs n1 >= 2")
    n1 = pop.n1
    return math.sqrt(n1 * (n1 - 1)) * pop.diff_sq_norm / math.sqrt(
        2.0 * pop.tr_mix2 + 4.0 * (n1 - 1) * pop.diff_mix_diff
    )


def theoretical_power_two(pop, alpha=0.05):
    """``1 - Phi(t_alpha(k) - SNR2)`` with the variance ratio frozen at 1."""
    snr = snr_two(pop)
    if pop.n1 < 3:
        raise InsufficientSampleError("power needs n1 >= 3")
    crit = t_upper_quantile(alpha, pair_degrees_of_freedom(pop.n1))
    return 1.0 - normal_cdf(crit - snr)


def c2_ratio(sigma1, sigma2):
    """Dominant trace ratio ``tr{(S1+S2)^4} / tr^2{(S1+S2)^2}``."""
    total = np.asarray(sigma1, dtype=float) + np.asarray(sigma2, dtype=float)
    sq = total @ total
    tr2 = float(np.trace(sq))
    if tr2 <= 0:
        raise ValueError("Sigma1 + Sigma2 must be nonzero")
    return float(np.sum(sq * sq)) / (tr2 * tr2)

"""Normal-reference competitor tests: Chen-Qin (one and two sample),
Bai-Saranadasa and Srivastava-Du (one sample).

All three are calibrated by asymptotics in which ``n`` also diverges, which
is what makes them over- or under-reject at very small ``n``.  Decisions are
upper-tail against ``z_alpha``.

Sums run through ``math.fsum`` and column moments are taken over sorted
columns, so every statistic is exactly invariant to the order of the rows.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._matrix import as_sample_matrix, cross_gram, fsum, gram, upper_pairs
from .errors import DegenerateDataError, InsufficientSampleError
from .special import normal_sf, normal_upper_quantile
from .two_sample import _check_pair

__all__ = [
    "CompetitorOutcome",
    "li_chen_tr_sigma2",
    "cq_one_sample_test",
    "cq_two_sample_test",
    "bs_one_sample_test",
    "sd_one_sample_test",
]


@dataclass(frozen=True)
class CompetitorOutcome:
    method: str
    statistic: float
    p_value: float
    reject: bool
    alpha: float

    def to_dict(self):
        return asdict(self)


def _decide(method, statistic, alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return CompetitorOutcome(
        method=method,
        statistic=statistic,
        p_value=normal_sf(statistic),
        reject=bool(statistic >= normal_upper_quantile(alpha)),
        alpha=alpha,
    )


def _require(n, minimum, method):
    if n < minimum:
        raise InsufficientSampleError(f"{method} needs at least {minimum} observations, got n={n}")


def _column_mean(X):
    # sorted columns give an order-free summation
    return np.sort(X, axis=0).sum(axis=0) / X.shape[0]


def _off_diagonal_u(G):
    n = G.shape[0]
    return 2.0 * fsum(upper_pairs(G)) / (n * (n - 1))


def li_chen_tr_sigma2(G):
    """Unbiased U-statistic estimate of tr(Sigma^2) from a Gram matrix.

    Averages ``(X_i'X_j)^2 - 2 X_i'X_j X_j'X_k + X_i'X_j X_k'X_l`` over
    distinct indices; unbiased for any mean vector.  Needs ``n >= 4``.
    """
    n = G.shape[0]
    G0 = G - np.diag(np.diag(G))
    sq = fsum(G0 * G0)
    rows = np.array([math.fsum(row) for row in G0.tolist()])
    triples = fsum(rows * rows) - sq
    total = fsum(G0)
    quads = total * total - 2.0 * sq - 4.0 * triples
    return (
        sq / math.perm(n, 2)
        - 2.0 * triples / math.perm(n, 3)
        + quads / math.perm(n, 4)
    )


def _positive(value, what):
    if not value > 0.0:
        raise DegenerateDataError(f"{what} is not positive ({value!r}); the statistic is undefined")
    return value


def cq_one_sample_test(X, alpha=0.05):
    """One-sample Chen-Qin test: ``U_n / sqrt(2 trhat / (n(n-1)))`` vs N(0, 1)."""
    X = as_sample_matrix(X)
    n = X.shape[0]
    _require(n, 4, "the CQ test")
    G = gram(X)
    tr_hat = _positive(li_chen_tr_sigma2(G), "the tr(Sigma^2) estimate")
    u_stat = _off_diagonal_u(G)
    return _decide("CQ", u_stat / math.sqrt(2.0 * tr_hat / (n * (n - 1))), alpha)


def cq_two_sample_test(X1, X2, alpha=0.05):
    """Two-sample Chen-Qin test with unbiased trace estimators.

    ``tr(Sigma_i^2)`` uses the Li-Chen U-statistic, ``tr(Sigma1 Sigma2)`` uses
    ``tr(S1 S2)`` of the two sample covariance matrices.
    """
    X1, X2 = _check_pair(X1, X2)
    n1, n2 = X1.shape[0], X2.shape[0]
    _require(min(n1, n2), 4, "the two-sample CQ test")
    G1, G2 = gram(X1), gram(X2)
    cross = fsum(cross_gram(X1, X2)) / (n1 * n2)
    numerator = _off_diagonal_u(G1) + _off_diagonal_u(G2) - 2.0 * cross

    H = cross_gram(X1 - _column_mean(X1), X2 - _column_mean(X2))
    tr12 = fsum(H * H) / ((n1 - 1) * (n2 - 1))
    variance = (
        2.0 * li_chen_tr_sigma2(G1) / (n1 * (n1 - 1))
        + 2.0 * li_chen_tr_sigma2(G2) / (n2 * (n2 - 1))
        + 4.0 * tr12 / (n1 * n2)
    )
    _positive(variance, "the variance estimate")
    return _decide("CQ", numerator / math.sqrt(variance), alpha)


def bs_one_sample_test(X, alpha=0.05):
    """One-sample Bai-Saranadasa test.

    The numerator ``n Xbar'Xbar - tr(S)`` equals ``n U_n``; tr(Sigma^2) is
    estimated by ``m^2/((m+2)(m-1)) (tr S^2 - (tr S)^2/m)`` with ``m = n - 1``.
    """
    X = as_sample_matrix(X)
    n = X.shape[0]
    _require(n, 3, "the BS test")
    m = n - 1
    Gc = gram(X - _column_mean(X))
    tr_s = fsum(np.diag(Gc)) / m
    tr_s2 = fsum(Gc * Gc) / (m * m)
    b_sq = _positive(
        m * m / ((m + 2) * (m - 1)) * (tr_s2 - tr_s * tr_s / m), "the tr(Sigma^2) estimate"
    )
    u_stat = _off_diagonal_u(gram(X))
    return _decide("BS", n * u_stat / math.sqrt(2.0 * (m + 1) / m * b_sq), alpha)


def sd_one_sample_test(X, alpha=0.05):
    """One-sample Srivastava-Du test on the diagonally standardized data.

    ``T = (n Xbar' D^-1 Xbar - m p/(m-2)) / sqrt(2 (tr R^2 - p^2/m) c)`` with
    ``D = diag(S)``, ``R`` the sample correlation matrix, ``m = n - 1`` and
    ``c = 1 + tr(R^2) / p^1.5``.  ``m > 2`` is required, i.e. ``n >= 4``.
    """
    X = as_sample_matrix(X)
    n, p = X.shape
    _require(n, 4, "the SD test")
    m = n - 1
    xbar = _column_mean(X)
    centered = X - xbar
    var = np.sort(centered * centered, axis=0).sum(axis=0) / m
    if np.any(var <= 0.0):
        raise DegenerateDataError("a coordinate has zero sample variance; the SD test is undefined")
    W = centered / np.sqrt(var)
    R_gram = gram(W)
    tr_r2 = fsum(R_gram * R_gram) / (m * m)
    spread = _positive(tr_r2 - p * p / m, "tr(R^2) - p^2/m")
    c = 1.0 + tr_r2 / p**1.5
    quad = n * fsum(xbar * xbar / var)
    return _decide("SD", (quad - m * p / (m - 2)) / math.sqrt(2.0 * spread * c), alpha)

"""Synthetic data from the linear model ``X_i = mu + Gamma Z_i``.

Covariance structures: identity, AR(1) with ``Sigma_jk = rho^|j-k|`` and the
random sparse model ``Sigma = G G' + I`` in which every row of ``G`` has four
nonzero entries of magnitude Unif(1, 2) with random signs.  Innovations are
standard normal or standardized t(4).

All randomness comes from an explicit ``numpy.random.Generator``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

__all__ = [
    "CovarianceSpec",
    "InnovationSpec",
    "MeanSpec",
    "FactorMatrix",
    "make_factor",
    "covariance_matrix",
    "sample_innovations",
    "generate_sample",
    "sparse_mean",
    "nonzero_count",
    "tr_sigma2_exact",
    "ar1_covariance",
]

COVARIANCE_KINDS = ("identity", "ar1", "sparse")
INNOVATION_KINDS = ("gaussian", "t4")


@dataclass(frozen=True)
class CovarianceSpec:
    kind: str = "ar1"
    rho: float = 0.6
    low: float = 1.0
    high: float = 2.0
    nonzeros_per_row: int = 4

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}; expected one of {COVARIANCE_KINDS}")
        if self.kind == "ar1" and not -1.0 < self.rho < 1.0:
            raise ValueError(f"AR(1) needs |rho| < 1, got {self.rho}")
        if self.kind == "sparse" and not 0 < self.low <= self.high:
            raise ValueError("sparse magnitudes need 0 < low <= high")

    @classmethod
    def identity(cls):
        return cls(kind="identity", rho=0.0)

    @classmethod
    def ar1(cls, rho=0.6):
        return cls(kind="ar1", rho=rho)

    @classmethod
    def random_sparse(cls):
        return cls(kind="sparse", rho=0.0)

    @property
    def is_random(self):
        return self.kind == "sparse"

    def label(self):
        if self.kind == "ar1":
            return f"ar1({self.rho:g})"
        return self.kind


@dataclass(frozen=True)
class InnovationSpec:
    """Distribution of the i.i.d. entries of ``Z_i`` (mean 0, variance 1).

    ``eta`` is the excess fourth moment ``E z^4 - 3``.  For t(4) it is
    infinite, so t(4) data sit outside the finite-fourth-moment model; they
    are kept as a robustness scenario.
    """

    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind not in INNOVATION_KINDS:
            raise ValueError(f"unknown innovation kind {self.kind!r}; expected one of {INNOVATION_KINDS}")

    @property
    def eta(self):
        return 0.0 if self.kind == "gaussian" else math.inf


@dataclass(frozen=True)
class MeanSpec:
    """``floor(p^(1-beta))`` entries equal to ``r`` at random positions, the rest zero."""

    p: int
    beta: float
    r: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    @property
    def count(self):
        return nonzero_count(self.p, self.beta)

    @property
    def sq_norm(self):
        return self.count * self.r * self.r


@dataclass(frozen=True, eq=False)
class FactorMatrix:
    """A p x q factor with ``matrix @ matrix.T == Sigma``.

    For the random sparse model ``matrix = [G | I_p]`` and ``sparse_part`` is ``G``.
    """

    matrix: np.ndarray
    target: CovarianceSpec
    sparse_part: np.ndarray = field(default=None, repr=False)

    @property
    def p(self):
        return self.matrix.shape[0]

    @property
    def q(self):
        return self.matrix.shape[1]

    @property
    def sigma(self):
        return covariance_matrix(self.target, self.p, self)


def nonzero_count(p, beta):
    # the small offset keeps exact integer powers such as 400**0.5 from flooring down
    return int(math.floor(p ** (1.0 - beta) + 1e-9))


def ar1_covariance(p, rho):
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _sparse_block(spec, p, rng):
    k = spec.nonzeros_per_row
    if p < k:
        raise ValueError(f"the random sparse model needs p >= {k}, got p={p}")
    cols = rng.random((p, p)).argpartition(k - 1, axis=1)[:, :k]
    mags = rng.uniform(spec.low, spec.high, size=(p, k))
    signs = rng.choice((-1.0, 1.0), size=(p, k))
    G = np.zeros((p, p))
    np.put_along_axis(G, cols, mags * signs, axis=1)
    return G


def make_factor(spec, p, rng=None):
    """Build ``Gamma`` with ``Gamma Gamma' = Sigma`` for the given structure.

    ``rng`` is only consulted for the random sparse model.
    """
    if p < 1:
        raise ValueError("p must be positive")
    if spec.kind == "identity":
        matrix = np.eye(p)
    elif spec.kind == "ar1":
        try:
            matrix = np.linalg.cholesky(ar1_covariance(p, spec.rho))
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError(f"Cholesky factorization failed for {spec.label()}, p={p}") from exc
    else:
        if rng is None:
            raise ValueError("the random sparse model needs a random generator")
        G = _sparse_block(spec, p, rng)
        return FactorMatrix(np.hstack([G, np.eye(p)]), spec, G)
    return FactorMatrix(matrix, spec)


def covariance_matrix(spec, p, factor=None):
    if spec.kind == "identity":
        return np.eye(p)
    if spec.kind == "ar1":
        return ar1_covariance(p, spec.rho)
    if factor is None or factor.sparse_part is None:
        raise ValueError("the random sparse covariance is defined by a realized factor")
    G = factor.sparse_part
    return G @ G.T + np.eye(p)


def sample_innovations(spec, q, n, rng):
    """n x q matrix of i.i.d. mean-0, variance-1 draws."""
    if spec.kind == "gaussian":
        return rng.standard_normal((n, q))
    # Var t(4) = 2
    return rng.standard_t(4, size=(n, q)) / math.sqrt(2.0)


def generate_sample(mu, factor, innov, n, rng):
    """n rows ``mu + Gamma Z_i`` with fresh innovations."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (factor.p,):
        raise ShapeError(f"mean has shape {mu.shape}, factor expects ({factor.p},)")
    Z = sample_innovations(innov, factor.q, n, rng)
    if factor.sparse_part is not None:
        p = factor.p
        X = Z[:, :p] @ factor.sparse_part.T + Z[:, p:]
    else:
        X = Z @ factor.matrix.T
    X += mu
    return X


def sparse_mean(spec, rng):
    mu = np.zeros(spec.p)
    count = spec.count
    if count > 0:
        mu[rng.choice(spec.p, size=count, replace=False)] = spec.r
    return mu


def tr_sigma2_exact(spec, p, factor=None):
    """``tr(Sigma^2)``: closed form for identity and AR(1), Frobenius norm otherwise."""
    if spec.kind == "identity":
        return float(p)
    if spec.kind == "ar1":
        r2 = spec.rho * spec.rho
        return math.fsum([float(p)] + [2.0 * (p - d) * r2**d for d in range(1, p)])
    sigma = covariance_matrix(spec, p, factor)
    return float(np.sum(sigma * sigma))

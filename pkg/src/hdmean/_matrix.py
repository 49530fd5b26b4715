"""Input validation and compensated Gram-matrix accumulation."""

import math

import numpy as np

from .errors import ShapeError

# Column block width for the compensated Gram accumulation.
GRAM_BLOCK = 256


def as_sample_matrix(X, name="X"):
    """Validate ``X`` as an n x p matrix of finite reals.

    Returns a read-only float64 array (a copy when ``X`` is writable).
    """
    arr = np.array(X, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be a 2-d array (rows = observations), got ndim={arr.ndim}")
    n, p = arr.shape
    if n < 1 or p < 1:
        raise ShapeError(f"{name} must have at least one row and one column, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def gram(X, block=GRAM_BLOCK):
    """Inner products ``X @ X.T`` accumulated over column blocks.

    Each block product goes through BLAS; block results are summed with
    Neumaier compensation so wide matrices do not lose digits.
    """
    n, p = X.shape
    if p <= block:
        G = X @ X.T
    else:
        G = np.zeros((n, n))
        comp = np.zeros((n, n))
        for start in range(0, p, block):
            Xb = X[:, start:start + block]
            term = Xb @ Xb.T
            t = G + term
            big = np.abs(G) >= np.abs(term)
            comp += np.where(big, (G - t) + term, (term - t) + G)
            G = t
        G = G + comp
    # exact symmetry; only the upper triangle is used downstream
    return np.triu(G) + np.triu(G, 1).T


def cross_gram(X1, X2, block=GRAM_BLOCK):
    """Inner products ``X1 @ X2.T`` with the same blocked compensation."""
    p = X1.shape[1]
    if p <= block:
        return X1 @ X2.T
    H = np.zeros((X1.shape[0], X2.shape[0]))
    comp = np.zeros_like(H)
    for start in range(0, p, block):
        term = X1[:, start:start + block] @ X2[:, start:start + block].T
        t = H + term
        big = np.abs(H) >= np.abs(term)
        comp += np.where(big, (H - t) + term, (term - t) + H)
        H = t
    return H + comp


def upper_pairs(G):
    """Entries ``G[i, j]`` for ``i < j`` in lexicographic order."""
    iu = np.triu_indices(G.shape[0], 1)
    return G[iu]


def fsum(values):
    return math.fsum(np.asarray(values, dtype=np.float64).ravel().tolist())

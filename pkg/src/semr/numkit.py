"""Small dense linear algebra, seeded Gaussian sampling and streaming covariance.

Dimensions in this package are small (d <= 16), so everything is dense numpy.
"""
from __future__ import annotations

import copy

import numpy as np

from .errors import DimensionMismatch, NotPsd

PIVOT_TOL = 1e-10
SYMMETRY_TOL = 1e-12


def as_square(m) -> np.ndarray:
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def check_symmetric(m, tol: float = SYMMETRY_TOL) -> np.ndarray:
    a = as_square(m)
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > tol * scale:
        raise NotPsd("matrix is not symmetric")
    return a


def cholesky(m) -> np.ndarray:
    """Lower Cholesky factor of a symmetric PSD matrix.

    Pivots in [-1e-10, 0] are clamped to zero so that covariances which lost
    definiteness to round-off (or are genuinely singular) still factor.
    """
    a = check_symmetric(m)
    d = a.shape[0]
    L = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if pivot < -PIVOT_TOL:
            raise NotPsd(f"negative pivot {pivot:.3g} at column {j}")
        if pivot <= 0.0:
            # singular direction: the remaining column carries no mass
            continue
        L[j, j] = np.sqrt(pivot)
        for i in range(j + 1, d):
            L[i, j] = (a[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def is_psd(m) -> bool:
    try:
        cholesky(m)
    except NotPsd:
        return False
    return True


def frobenius_norm(m) -> float:
    return float(np.sqrt(np.sum(as_square(m) ** 2)))


def spectral_norm(m) -> float:
    a = as_square(m)
    if np.array_equal(a, a.T):
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return float(np.linalg.norm(a, 2))


def trace(m) -> float:
    return float(np.trace(as_square(m)))


class RngStream:
    """Counter-based random stream keyed by (root seed, stream id).

    Backed by Philox; streams with distinct ids are derived through
    ``SeedSequence`` spawn keys and are statistically independent.
    ``counter`` counts variates handed out so far.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self.counter = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream}, counter={self.counter})"

    def standard_normal(self, size) -> np.ndarray:
        out = self._gen.standard_normal(size)
        self.counter += out.size
        return out

    def random(self, size) -> np.ndarray:
        out = self._gen.random(size)
        self.counter += out.size
        return out

    def integers(self, high, size=None):
        out = self._gen.integers(high, size=size)
        self.counter += np.size(out)
        return out

    def snapshot(self) -> "RngStream":
        """Independent copy positioned at the same counter."""
        return copy.deepcopy(self)

    def substream(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


def affine_normal(mean, chol, z) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    return mean + chol @ z


def mvn_sample(mean, chol, rng: RngStream) -> np.ndarray:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    chol = np.atleast_2d(np.asarray(chol, dtype=float))
    d = mean.shape[0]
    if chol.shape != (d, d):
        raise DimensionMismatch(f"mean has dimension {d} but factor is {chol.shape}")
    return affine_normal(mean, chol, rng.standard_normal(d))


class StreamingCovariance:
    """One-pass (Welford) accumulator for the mean and centered scatter.

    ``scatter`` is the sum of outer products of deviations from the running
    mean, so ``scatter / count`` and ``scatter / (count - 1)`` are the biased
    and unbiased covariance estimates.
    """

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.count = 0
        self.mean = np.zeros(self.dim)
        self.scatter = np.zeros((self.dim, self.dim))

    def update(self, x) -> "StreamingCovariance":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"expected a {self.dim}-vector, got shape {x.shape}")
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.scatter = self.scatter + np.outer(delta, x - self.mean)
        return self

    def covariance(self, ddof: int = 0) -> np.ndarray:
        denom = self.count - ddof
        if denom <= 0:
            return np.zeros((self.dim, self.dim))
        return self.scatter / denom

    def trace(self, ddof: int = 0) -> float:
        denom = self.count - ddof
        if denom <= 0:
            return 0.0
        return float(np.trace(self.scatter)) / denom

    def copy(self) -> "StreamingCovariance":
        return copy.deepcopy(self)


def streaming_update(acc: StreamingCovariance, x) -> StreamingCovariance:
    """Functional form of :meth:`StreamingCovariance.update`; ``acc`` is untouched."""
    return acc.copy().update(x)

"""Dense float64 arrays, the two norms everything else is written against,
and a seeded random stream.

Matrices are 2-d ``np.ndarray`` (row-major), vectors are 1-d. Matrix norms
are Frobenius, vector norms Euclidean; a length-1 vector's norm is the
absolute value of its entry.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got ndim={m.ndim}")
    return m


def as_vector(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise DimensionError(f"expected a 1-d array, got ndim={a.ndim}")
    return a


def frobenius_norm(m) -> float:
    """sqrt of the sum of squared entries; errors on an empty matrix."""
    a = as_matrix(m)
    if a.size == 0:
        raise DimensionError("frobenius_norm of an empty matrix")
    return float(np.linalg.norm(a))


def vector_2norm(v) -> float:
    """Euclidean norm; errors on an empty vector."""
    a = as_vector(v)
    if a.size == 0:
        raise DimensionError("vector_2norm of an empty vector")
    return float(np.linalg.norm(a))


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape[1] != mb.shape[0]:
        raise DimensionError(
            f"matmul dimension mismatch: {ma.shape} x {mb.shape}"
        )
    return ma @ mb


class Rng:
    """Seeded PCG64 stream; identical seeds give bit-identical draws.

    ``spawn(key)`` derives an independent child stream deterministically,
    so experiment arms can share a master seed without sharing state.
    """

    def __init__(self, seed: int, _ss: np.random.SeedSequence | None = None):
        self.seed = int(seed)
        self._ss = _ss if _ss is not None else np.random.SeedSequence(self.seed)
        self._gen = np.random.Generator(np.random.PCG64(self._ss))

    def spawn(self, key: int) -> "Rng":
        child = np.random.SeedSequence(self.seed, spawn_key=(int(key),))
        return Rng(self.seed, _ss=child)

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None) -> np.ndarray:
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

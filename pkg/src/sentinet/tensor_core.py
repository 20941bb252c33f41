"""Dense float64 numeric kernel shared by every layer.

Matrices are plain 2-D C-contiguous ``numpy.float64`` arrays; this module
wraps the handful of operations the layers need (products, elementwise
nonlinearities, seeded initialization) behind shape-checked functions so
that shape bugs surface as :class:`ShapeMismatch` instead of silent
broadcasting.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = [
    "ShapeMismatch",
    "Rng",
    "matrix",
    "matmul",
    "add",
    "hadamard",
    "tanh",
    "sigmoid",
    "init_uniform",
]


class ShapeMismatch(ValueError):
    """Operand shapes are incompatible for the requested operation."""


def matrix(rows: int, cols: int, fill: float = 0.0) -> np.ndarray:
    """Allocate a rows x cols float64 matrix filled with a constant."""
    if rows < 1 or cols < 1:
        raise ShapeMismatch(f"matrix dims must be positive, got {rows}x{cols}")
    return np.full((rows, cols), float(fill), dtype=np.float64)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Standard matrix product; requires a.cols == b.rows."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatch(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"inner dims differ: {a.shape} x {b.shape}")
    return a @ b


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise sum of two equally shaped arrays."""
    if a.shape != b.shape:
        raise ShapeMismatch(f"add needs equal shapes, got {a.shape} and {b.shape}")
    return a + b


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise (Hadamard) product of two equally shaped arrays."""
    if a.shape != b.shape:
        raise ShapeMismatch(f"hadamard needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def tanh(x: np.ndarray) -> np.ndarray:
    """Entrywise hyperbolic tangent, output in (-1, 1)."""
    return np.tanh(x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Entrywise logistic function, output in (0, 1).

    Computed in the branch form that only ever exponentiates non-positive
    values, so arguments beyond +-700 cannot overflow to inf/NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Rng:
    """Deterministic counter-based random source with splittable streams.

    Built on the Philox counter generator.  ``split(label)`` derives an
    independent child stream from (seed, label), so each parameter tensor
    can own a stream and adding a tensor never perturbs the draws of
    another.  Identical seeds reproduce identical draw sequences.
    """

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._spawn_key = _spawn_key
        seq = np.random.SeedSequence(self.seed, spawn_key=_spawn_key)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def split(self, label: str) -> "Rng":
        """Derive the child stream named by ``label``."""
        key = zlib.crc32(label.encode("utf-8"))
        return Rng(self.seed, self._spawn_key + (key,))

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self._gen.uniform(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def init_uniform(rng: Rng, rows: int, cols: int, scale: float) -> np.ndarray:
    """rows x cols matrix with i.i.d. entries uniform in [-scale, +scale]."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return rng.uniform(-scale, scale, (rows, cols))

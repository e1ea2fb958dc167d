"""Dense vector/matrix kernels, activations, and reproducible Gaussian streams.

Everything here is pure 64-bit float math. The random number generator is
counter-based: the value of draw ``i`` from a stream is a pure function of
``(seed, i)``, so any draw can be recomputed without replaying the ones
before it, and independent workers can share one master seed by deriving
per-task seeds with :func:`derive_seed`.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15  # SplitMix64 increment

# Multipliers of the SplitMix64 finalizer (Steele et al.).
_MIX_MUL1 = 0xBF58476D1CE4E5B9
_MIX_MUL2 = 0x94D049BB133111EB


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer over a uint64 array (wrapping arithmetic)."""
    z = (z ^ (z >> 30)) * _MIX_MUL1
    z = (z ^ (z >> 27)) * _MIX_MUL2
    return z ^ (z >> 31)


def _mix64_int(z: int) -> int:
    """Scalar SplitMix64 finalizer on Python ints, identical to `_mix64`."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_MUL1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_MUL2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Fold integer components into a new 64-bit stream seed.

    The fold is order-sensitive: ``derive_seed(s, 1, 2) != derive_seed(s, 2, 1)``.
    This is the documented split rule for parallel work: every
    (layer, kind, sample, repeat) cell owns the seed derived from the master
    seed and those indices, so results never depend on scheduling order.
    """
    seed = master & _MASK64
    for p in parts:
        seed = _mix64_int(seed ^ _mix64_int((p & _MASK64) + _GOLDEN))
    return seed


def _words(seed: int, counters: np.ndarray) -> np.ndarray:
    """Hashed 64-bit word at each counter position for the given seed."""
    s = np.uint64(seed & _MASK64)
    return _mix64(s + (counters + np.uint64(1)) * np.uint64(_GOLDEN))


def gaussian_at(seed: int, position: int, n: int) -> np.ndarray:
    """``n`` standard-normal draws at absolute stream positions.

    Draw ``i`` consumes exactly the hashed words ``2i`` and ``2i+1`` and maps
    them through Box-Muller (cosine branch), so one draw occupies exactly one
    stream position. Stateless companion of :meth:`RandomStream.gaussian`.
    """
    if n < 1:
        raise ValueError(f"need at least one draw, got n={n}")
    idx = np.arange(position, position + n, dtype=np.uint64)
    w1 = _words(seed, idx * np.uint64(2))
    w2 = _words(seed, idx * np.uint64(2) + np.uint64(1))
    # Top 53 bits; u1 in (0, 1] keeps the log finite, u2 in [0, 1).
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (w2 >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def gaussian_block(seeds: np.ndarray, n: int) -> np.ndarray:
    """Standard-normal draws 0..n-1 for many streams at once.

    Row ``k`` equals ``RandomStream(seeds[k]).gaussian(n)`` bit for bit; this
    is the vectorized path used when one noise realization spans a whole
    dataset of per-sample streams.
    """
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1)
    idx = np.arange(n, dtype=np.uint64)
    w1 = _mix64(seeds + (idx * np.uint64(2) + np.uint64(1)) * np.uint64(_GOLDEN))
    w2 = _mix64(seeds + (idx * np.uint64(2) + np.uint64(2)) * np.uint64(_GOLDEN))
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (w2 >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def uniform_at(seed: int, position: int, n: int) -> np.ndarray:
    """``n`` uniform draws in [0, 1) at absolute stream positions.

    Uniform draw ``i`` consumes hashed word ``2i`` (the same position
    accounting as the Gaussian draws; a stream should be used for one kind
    of draw only).
    """
    if n < 1:
        raise ValueError(f"need at least one draw, got n={n}")
    idx = np.arange(position, position + n, dtype=np.uint64)
    w = _words(seed, idx * np.uint64(2))
    return (w >> np.uint64(11)).astype(np.float64) * 2.0**-53


class RandomStream:
    """A seeded, positioned stream of random draws.

    Identical ``(seed, position)`` always yields identical next draws;
    distinct seeds yield statistically independent streams. Each draw
    advances ``position`` by exactly one, so positions stay computable
    across any mix of call sizes.
    """

    __slots__ = ("seed", "position")

    def __init__(self, seed: int, position: int = 0):
        self.seed = int(seed) & _MASK64
        self.position = int(position)

    def gaussian(self, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. standard-normal values and advance by ``n``."""
        out = gaussian_at(self.seed, self.position, n)
        self.position += n
        return out

    def uniform(self, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. uniform [0, 1) values and advance by ``n``."""
        out = uniform_at(self.seed, self.position, n)
        self.position += n
        return out

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed:#x}, position={self.position})"


def matvec(weights: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Row vector times matrix: ``out[j] = sum_i vec[i] * weights[i, j]``.

    The orientation matches the layer convention used throughout: an
    activation row vector enters on the left, so a 784-to-20 layer stores a
    (784, 20) matrix.
    """
    weights = np.asarray(weights, dtype=np.float64)
    vec = np.asarray(vec, dtype=np.float64)
    if weights.ndim != 2:
        raise ValueError(f"weights must be 2-D, got shape {weights.shape}")
    if vec.shape != (weights.shape[0],):
        raise ValueError(
            f"shape mismatch: vector {vec.shape} vs matrix {weights.shape} "
            f"(need vector length {weights.shape[0]})"
        )
    return vec @ weights


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function 1/(1+exp(-x)), overflow-safe.

    Computed from exp(-|x|) so no intermediate ever overflows; outputs are
    strictly inside (0, 1) up to float saturation.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def softmax(z: np.ndarray) -> np.ndarray:
    """Exponential normalization along the last axis, max-subtracted.

    Accepts a vector or a batch of row vectors; outputs are positive and
    each row sums to 1.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 0 or z.shape[-1] == 0:
        raise ValueError("softmax of an empty vector")
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)

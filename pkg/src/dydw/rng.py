"""Counter-based pseudorandom function for the lattice arrow processes.

Every random quantity is a pure function of ``(seed, web_id, x, t, draw)``.
The mixing primitive is the splitmix64 finalizer.  Draw layout per site::

    draw 0        -> arrow value on [0, first ring)
    draw 2j + 1   -> exponential gap before ring j   (j = 0, 1, ...)
    draw 2j + 2   -> arrow value redrawn at ring j

Scalar versions are numba kernels; ``*_np`` versions are vectorized numpy
equivalents used by the fallback batch paths.
"""

import numpy as np

from ._accel import njit, quiet_overflow

MASK64 = (1 << 64) - 1

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_KX = np.uint64(0xD1B54A32D192ED03)
_KT = np.uint64(0xABC98388FB8FAC03)
_KD = np.uint64(0x8CB92BA72F3D8DD7)
_KR = np.uint64(0xF1357AEA2E62A9C5)
_ONE = np.uint64(1)
_OFFSET = 1 << 32
_TO_UNIT = 1.0 / 4503599627370496.0  # 2**-52

MAIN = 0
SECONDARY = 1


@njit
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit
def site_key(seed, web, x, t):
    h = mix64(np.uint64(seed) + _GOLDEN * np.uint64(web + 1))
    h = mix64(h ^ (np.uint64(x + _OFFSET) * _KX))
    return mix64(h ^ (np.uint64(t + _OFFSET) * _KT))


@njit
def draw_uniform(key, i):
    """Uniform in the open interval (0, 1); 52 random bits."""
    # keys cross the Python boundary as plain ints; pin the type so xor stays unsigned
    key = np.uint64(key)
    h = mix64(key ^ (np.uint64(i + 1) * _KD))
    return (float(h >> _S12) + 0.5) * _TO_UNIT


@njit
def arrow_value(key, j):
    """Arrow after ring ``j - 1`` (``j = 0`` is the initial arrow)."""
    if draw_uniform(key, 2 * j) < 0.5:
        return 1
    return -1


@njit
def ring_gap(key, j):
    return -np.log(draw_uniform(key, 2 * j + 1))


def replicate_seeds(seed_root, n):
    """Per-replicate web seeds: ``mix64(mix64(seed_root ^ KR) + mix64(i + 1))``.

    Stable across versions; replicate ``i`` depends only on ``(seed_root, i)``.
    """
    with quiet_overflow():
        root = mix64_np(np.array([int(seed_root) & MASK64], dtype=np.uint64) ^ _KR)[0]
        idx = np.arange(1, n + 1, dtype=np.uint64)
        return mix64_np(root + mix64_np(idx))


# vectorized numpy twins -------------------------------------------------------


def mix64_np(z):
    with quiet_overflow():
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)


def site_key_np(seed, web, x, t):
    seed = np.asarray(seed, dtype=np.uint64)
    x = np.asarray(x, dtype=np.int64)
    t = np.asarray(t, dtype=np.int64)
    with quiet_overflow():
        h = mix64_np(seed + _GOLDEN * np.uint64(web + 1))
        h = mix64_np(h ^ ((x + _OFFSET).astype(np.uint64) * _KX))
        return mix64_np(h ^ ((t + _OFFSET).astype(np.uint64) * _KT))


def draw_uniform_np(key, i):
    i = np.asarray(i, dtype=np.int64)
    with quiet_overflow():
        h = mix64_np(key ^ ((i + 1).astype(np.uint64) * _KD))
    return ((h >> _S12).astype(np.float64) + 0.5) * _TO_UNIT


def arrow_value_np(key, j):
    return np.where(draw_uniform_np(key, 2 * np.asarray(j)) < 0.5, 1, -1).astype(np.int8)


def ring_gap_np(key, j):
    return -np.log(draw_uniform_np(key, 2 * np.asarray(j) + 1))

"""Counter-based random streams.

Every draw is a pure function of ``(key, counter)``: the key is derived from
the run seed, the replica index and a purpose tag, and the counter indexes the
draw inside that stream.  Any single draw can therefore be regenerated in
isolation, and edge weights of the first-passage oracle can be keyed by the
edge itself.

The bit mixer is the SplitMix64 finalizer applied twice (once to the counter,
once to the keyed result).  Numba kernels call :func:`bits64`, :func:`uniform`
and :func:`exponential` directly with an explicit counter.
"""
from __future__ import annotations

import hashlib

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0

_MASK = (1 << 64) - 1


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def bits64(key, counter):
    c = np.uint64(counter)
    return mix64(np.uint64(key) ^ mix64(c * _GOLDEN + _GOLDEN))


@njit(cache=True, inline="always")
def uniform(key, counter):
    """Uniform double on the open interval (0, 1)."""
    b = bits64(key, counter) >> _S11
    return (float(b) + 0.5) * _TWO_M53


@njit(cache=True, inline="always")
def exponential(key, counter):
    return -np.log(uniform(key, counter))


def _py_mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def tag_hash(tag: str) -> int:
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


def derive_key(seed: int, tag: str, index: int = 0) -> int:
    """64-bit stream key for ``(seed, tag, index)``; stable across platforms."""
    z = _py_mix64(seed & _MASK)
    z = _py_mix64(z ^ tag_hash(tag))
    return _py_mix64(z ^ ((index * 0x9E3779B97F4A7C15) & _MASK))


class Stream:
    """A named counter-based stream owned by one consumer at a time.

    Numba kernels receive ``stream.key`` / ``stream.counter`` and hand back the
    advanced counter via :meth:`sync`.
    """

    def __init__(self, seed: int, tag: str, index: int = 0, counter: int = 0):
        self.seed = seed
        self.tag = tag
        self.index = index
        self.key = np.uint64(derive_key(seed, tag, index))
        self.counter = counter

    def uniform(self) -> float:
        u = uniform(self.key, self.counter)
        self.counter += 1
        return float(u)

    def exponential(self) -> float:
        e = exponential(self.key, self.counter)
        self.counter += 1
        return float(e)

    def uniforms(self, n: int) -> np.ndarray:
        out = _fill_uniform(self.key, np.int64(self.counter), n)
        self.counter += n
        return out

    def sync(self, counter: int) -> None:
        self.counter = int(counter)

    def __repr__(self) -> str:
        return f"Stream(seed={self.seed}, tag={self.tag!r}, index={self.index}, counter={self.counter})"


@njit(cache=True)
def _fill_uniform(key, start, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = uniform(key, start + i)
    return out

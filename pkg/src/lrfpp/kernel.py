"""Communication rate kernels on Z^d and exact displacement sampling.

A kernel is ``r(k) = k**-alpha * L(k)`` with ``L`` either 1 or
``(1 + ln k)**-p`` (p > 1).  The dispersal step needs the lattice sum
``lambda = sum_x r(|x|_1)`` and draws ``Y`` with ``P(Y = y) = r(|y|_1) / lambda``.

Sampling is split into a radius draw and a uniform point on the l1 shell.
Radii ``1..K`` come from an alias table; the remaining tail is drawn by
rejection from a continuous power (or power-log) envelope, which keeps the
law exact for arbitrarily long jumps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import mpmath
import numpy as np
from numba import njit

from .errors import InstantaneousRegime
from .rng import uniform

MAX_DIM = 8
# Alias table covers at most this many radii; the rest is the rejection tail.
K_CAP = 1 << 20
HEAD_TAIL_TARGET = 1e-12
# Jumps longer than this are dropped (resampled, or thinned in the skip-ahead
# engine) so that coordinates stay exact in int64 and float arithmetic.
X_LIMIT = float(1 << 53)


@dataclass(frozen=True)
class Unit:
    """L(k) = 1."""

    def __call__(self, k):
        return np.ones_like(np.asarray(k, dtype=float)) if np.ndim(k) else 1.0

    @property
    def p(self) -> float:
        return 0.0


@dataclass(frozen=True)
class LogPower:
    """L(k) = (1 + ln k)^-p with p > 1."""

    p: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"LogPower needs p > 1, got {self.p}")

    def __call__(self, k):
        return (1.0 + np.log(k)) ** (-self.p)


SlowVary = Union[Unit, LogPower]

Site = tuple


@dataclass(frozen=True)
class Kernel:
    d: int
    alpha: float
    slowvary: SlowVary = field(default_factory=Unit)
    gamma: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.d, (int, np.integer)) and 1 <= self.d <= MAX_DIM):
            raise ValueError(f"d must be an integer in [1, {MAX_DIM}], got {self.d!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def summable(self) -> bool:
        if self.alpha > self.d:
            return True
        return self.alpha == self.d and isinstance(self.slowvary, LogPower)

    def require_summable(self) -> None:
        if not self.summable:
            raise InstantaneousRegime(self.d, self.alpha)

    def rate(self, k):
        return rate(self, k)


def l1(site) -> int:
    return int(sum(abs(int(c)) for c in site))


def linf(site) -> int:
    return int(max((abs(int(c)) for c in site), default=0))


def rate(kernel: Kernel, k):
    """k^-alpha L(k); accepts scalars or arrays of integers >= 1."""
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 1):
        raise ValueError(f"rate is defined for k >= 1, got {k}")
    out = k_arr ** (-kernel.alpha) * kernel.slowvary(k_arr)
    return float(out) if np.ndim(out) == 0 else out


def shell_count(d: int, k: int) -> int:
    """Number of lattice points at l1 distance exactly k from the origin."""
    if d < 1 or k < 1:
        raise ValueError("shell_count needs d >= 1 and k >= 1")
    return sum(2**i * math.comb(d, i) * math.comb(k - 1, i - 1) for i in range(1, min(d, k) + 1))


def _shell_poly(d: int) -> np.polynomial.Polynomial:
    """v_d as a polynomial in k (exact for every k >= 1)."""
    P = np.polynomial.Polynomial
    total = P([0.0])
    for i in range(1, d + 1):
        term = P([float(2**i * math.comb(d, i))])
        for j in range(1, i):
            term = term * P([-1.0, 1.0 / j])
        total = total + term
    return total


def _radial_weights(kernel: Kernel, ks: np.ndarray) -> np.ndarray:
    v = _shell_poly(kernel.d)(ks.astype(float))
    return v * rate(kernel, ks)


def _tail_integral(kernel: Kernel, a: float) -> float:
    """Exact integral of v_d(x) r(x) over [a, inf)."""
    coefs = _shell_poly(kernel.d).coef
    p = kernel.slowvary.p
    total = mpmath.mpf(0)
    u0 = 1 + mpmath.log(a)
    for m, c in enumerate(coefs):
        if c == 0:
            continue
        s = kernel.alpha - m - 1  # integrand x^{-(s+1)} L(x)
        if p == 0:
            if s <= 0:
                return math.inf
            total += c * mpmath.mpf(a) ** (-s) / s
        elif s > 0:
            total += c * mpmath.e**s * mpmath.mpf(s) ** (p - 1) * mpmath.gammainc(1 - p, s * u0)
        elif s == 0:
            total += c * u0 ** (1 - p) / (p - 1)
        else:
            return math.inf
    return float(total)


def _fprime(kernel: Kernel, x: float, order: int) -> float:
    h = 1e-3 * x
    f = lambda y: float(_radial_weights(kernel, np.array([y]))[0])  # noqa: E731
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    # third derivative, central stencil
    return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h**3)


def _tail_sum(kernel: Kernel, a: int) -> tuple[float, float]:
    """sum_{k >= a} v_d(k) r(k) by Euler-Maclaurin; returns (value, error bound)."""
    fa = float(_radial_weights(kernel, np.array([a]))[0])
    integral = _tail_integral(kernel, a)
    value = integral + fa / 2 - _fprime(kernel, a, 1) / 12
    err = 2 * abs(_fprime(kernel, a, 3)) / 720
    return value, err


def total_rate(kernel: Kernel, rel_tol: float = 1e-12) -> float:
    """lambda = sum over nonzero x of r(|x|_1), to relative accuracy rel_tol."""
    kernel.require_summable()
    return _total_rate_cached(kernel, rel_tol)


@lru_cache(maxsize=64)
def _total_rate_cached(kernel: Kernel, rel_tol: float) -> float:
    K = max(64, 4 * kernel.d)
    while True:
        head = float(np.sum(_radial_weights(kernel, np.arange(K, 0, -1))))
        tail, err = _tail_sum(kernel, K + 1)
        total = head + tail
        if err <= rel_tol * total / 4 or K >= 1 << 22:
            return total
        K *= 4


def dropped_mass(kernel: Kernel) -> float:
    """Fraction of the displacement law at |Y|_1 >= X_LIMIT.

    Samplers redraw such jumps from the tail beyond the alias-table radius,
    so that share of mass moves onto shorter tail radii.

    Negligible for alpha > d; about 1.6% for alpha = d = 1 with L = LogPower(2).
    """
    tail, _ = _tail_sum(kernel, int(X_LIMIT))
    return tail / total_rate(kernel)


def _shell_ratio(d: int, x: float) -> float:
    return float(_shell_poly(d)(x)) / x ** (d - 1)


@dataclass(frozen=True, eq=False)
class DisplacementSampler:
    """Precomputed tables for exact draws of Y with P(Y = y) = r(|y|_1)/lambda.

    ``fp``/``ip`` pack scalar parameters for the numba kernels:
    fp = [alpha, p, s, p_env, M, p_head, lam, K+1]
    ip = [d, K, logpower]
    """

    kernel: Kernel
    lam: float
    K: int
    alias_prob: np.ndarray
    alias_idx: np.ndarray
    one_sided_tail: np.ndarray  # T[m] = sum_{k>=m} r(k), m = 0..K+1 (T[0] unused)
    fp: np.ndarray
    ip: np.ndarray

    @property
    def p_head(self) -> float:
        return float(self.fp[5])

    def tables(self):
        return (self.alias_prob, self.alias_idx, self.one_sided_tail, self.fp, self.ip)


def _alias_table(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = len(w)
    prob = w * (n / w.sum())
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if prob[i] < 1.0]
    large = [i for i in range(n) if prob[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        alias[s] = g
        prob[g] = (prob[g] + prob[s]) - 1.0
        (small if prob[g] < 1.0 else large).append(g)
    for i in small + large:
        prob[i] = 1.0
    return prob, alias


def choose_head_radius(kernel: Kernel, target: float = HEAD_TAIL_TARGET, cap: int = K_CAP) -> int:
    lam = total_rate(kernel)
    K = max(16, 2 * kernel.d)
    while K < cap:
        tail, _ = _tail_sum(kernel, K + 1)
        if tail <= target * lam:
            return K
        K *= 2
    return cap


def build_sampler(kernel: Kernel, head_radius: int | None = None) -> DisplacementSampler:
    """Alias table over radii 1..K plus rejection-tail parameters.

    ``head_radius`` overrides the automatic choice (used by tests to force
    traffic through the tail sampler).
    """
    kernel.require_summable()
    lam = total_rate(kernel)
    K = head_radius if head_radius is not None else choose_head_radius(kernel)
    ks = np.arange(1, K + 1)
    w = _radial_weights(kernel, ks)
    tail_two, _ = _tail_sum(kernel, K + 1)
    head_mass = float(np.sum(w[::-1]))
    p_head = head_mass / (head_mass + tail_two)
    prob, alias = _alias_table(w)

    logpower = isinstance(kernel.slowvary, LogPower)
    p = kernel.slowvary.p
    p_env = p if (logpower and kernel.alpha == kernel.d) else 0.0
    s = kernel.alpha - kernel.d + 1
    M = _envelope_constant(float(K + 1), kernel.d, s, p_env, False)

    # one-sided radial tail sums (used by the d = 1 skip-ahead engine)
    r = rate(kernel, ks)
    beyond_one = tail_two / 2 if kernel.d == 1 else 0.0
    T = np.zeros(K + 2)
    T[K + 1] = beyond_one
    T[1 : K + 1] = np.cumsum(r[::-1])[::-1] + beyond_one

    fp = np.array([kernel.alpha, p, s, p_env, M, p_head, lam, float(K + 1)])
    ip = np.array([kernel.d, K, int(logpower)], dtype=np.int64)
    return DisplacementSampler(kernel, lam, K, prob, alias, T, fp, ip)


@lru_cache(maxsize=32)
def sampler_for(kernel: Kernel) -> DisplacementSampler:
    return build_sampler(kernel)


def sample_displacement(kernel: Kernel, stream) -> tuple:
    """Draw one displacement Y != 0 using ``stream`` (a :class:`~lrfpp.rng.Stream`)."""
    smp = sampler_for(kernel)
    out = np.zeros(kernel.d, dtype=np.int64)
    ctr = sample_point(stream.key, np.int64(stream.counter), *smp.tables(), out)
    stream.sync(ctr)
    return tuple(int(c) for c in out)


def sample_displacements(kernel: Kernel, stream, n: int) -> np.ndarray:
    smp = sampler_for(kernel)
    out = np.zeros((n, kernel.d), dtype=np.int64)
    ctr = _sample_many(stream.key, np.int64(stream.counter), *smp.tables(), out)
    stream.sync(ctr)
    return out


# --------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _shell_value(d, k):
    # v_d(k) in floating point
    total = 0.0
    cd = 1.0
    for i in range(1, d + 1):
        if i > k:
            break
        cd = cd * (d - i + 1) / i
        ck = 1.0
        for j in range(1, i):
            ck = ck * (k - j) / j
        total += 2.0**i * cd * ck
    return total


@njit(cache=True)
def _envelope_constant(x0, d, s, p_env, one_sided):
    # sup_{k >= x0} f(k) / int_k^{k+1} envelope, with v_d(k)/k^{d-1} decreasing
    if one_sided:
        v = 1.0
    else:
        v = _shell_value(d, x0) / x0 ** (d - 1)
    m = v * ((x0 + 1.0) / x0) ** s
    if p_env > 0:
        m *= (1.0 + 1.0 / (x0 * (1.0 + np.log(x0)))) ** p_env
    return m


@njit(cache=True)
def _envelope_mass(x0, s, p_env):
    if p_env > 0:
        return (1.0 + np.log(x0)) ** (1.0 - p_env) / (p_env - 1.0)
    return x0 ** (1.0 - s) / (s - 1.0)


@njit(cache=True)
def _envelope_cell(k, s, p_env):
    # integral of the envelope over [k, k+1]
    if p_env > 0:
        u = 1.0 + np.log(k)
        inc = np.log1p(1.0 / k) / u
        return u ** (1.0 - p_env) * (-np.expm1((1.0 - p_env) * np.log1p(inc))) / (p_env - 1.0)
    return k ** (1.0 - s) * (-np.expm1((1.0 - s) * np.log1p(1.0 / k))) / (s - 1.0)


@njit(cache=True)
def _rate_value(k, alpha, p, logpower):
    r = k ** (-alpha)
    if logpower:
        r *= (1.0 + np.log(k)) ** (-p)
    return r


@njit(cache=True)
def envelope_propose(key, ctr, x0, s, p_env):
    """Continuous draw from the envelope restricted to [x0, inf)."""
    u = uniform(key, ctr)
    if p_env > 0:
        return np.exp((1.0 + np.log(x0)) * u ** (1.0 / (1.0 - p_env)) - 1.0)
    return x0 * u ** (-1.0 / (s - 1.0))


@njit(cache=True)
def tail_attempt(key, ctr, x0, M, fp, ip, one_sided):
    """One envelope proposal with its acceptance test.

    Returns (k, accepted, ctr); ``k`` is an integer radius >= x0.  Used both
    as a plain rejection loop and as a thinning step (rejection = thinned
    event) by the skip-ahead engine.
    """
    alpha = fp[0]
    p = fp[1]
    p_env = fp[3]
    d = ip[0]
    s = alpha if one_sided else fp[2]
    x = envelope_propose(key, ctr, x0, s, p_env)
    ctr += 1
    u = uniform(key, ctr)
    ctr += 1
    if not x < 9007199254740992.0:
        return 0, False, ctr
    k = np.floor(x)
    f = _rate_value(k, alpha, p, ip[2] == 1)
    if not one_sided:
        f *= _shell_value(d, k)
    acc = f / (M * _envelope_cell(k, s, p_env))
    return np.int64(k), u < acc, ctr


@njit(cache=True)
def sample_radius(key, ctr, alias_prob, alias_idx, T, fp, ip):
    K = ip[1]
    u = uniform(key, ctr)
    ctr += 1
    if u < fp[5]:
        v = uniform(key, ctr) * K
        ctr += 1
        i = int(v)
        if i >= K:
            i = K - 1
        if v - i >= alias_prob[i]:
            i = alias_idx[i]
        return np.int64(i + 1), ctr
    while True:
        k, ok, ctr = tail_attempt(key, ctr, fp[7], fp[4], fp, ip, False)
        if ok:
            return k, ctr


@njit(cache=True)
def shell_point(key, ctr, d, k, out):
    """Uniform point on {x in Z^d : |x|_1 = k}, written into ``out``."""
    for j in range(d):
        out[j] = 0
    if d == 1:
        out[0] = k if uniform(key, ctr) < 0.5 else -k
        return ctr + 1
    imax = d if d < k else k
    w = np.empty(imax)
    cd = 1.0
    tot = 0.0
    for i in range(1, imax + 1):
        cd = cd * (d - i + 1) / i
        ck = 1.0
        for j in range(1, i):
            ck = ck * (k - j) / j
        w[i - 1] = 2.0**i * cd * ck
        tot += w[i - 1]
    u = uniform(key, ctr) * tot
    ctr += 1
    nz = imax
    acc = 0.0
    for i in range(imax):
        acc += w[i]
        if u < acc:
            nz = i + 1
            break
    # which coordinates are nonzero: partial Fisher-Yates
    perm = np.arange(d)
    for j in range(nz):
        r = j + int(uniform(key, ctr) * (d - j))
        ctr += 1
        if r >= d:
            r = d - 1
        tmp = perm[j]
        perm[j] = perm[r]
        perm[r] = tmp
    # composition of k into nz positive parts: nz-1 distinct cuts in 1..k-1
    cuts = np.empty(nz + 1, dtype=np.int64)
    cuts[0] = 0
    cuts[nz] = k
    j = 1
    while j < nz:
        c = 1 + np.int64(uniform(key, ctr) * (k - 1))
        ctr += 1
        if c > k - 1:
            c = k - 1
        dup = False
        for q in range(1, j):
            if cuts[q] == c:
                dup = True
                break
        if not dup:
            cuts[j] = c
            j += 1
    # insertion sort of the interior cuts
    for a in range(2, nz):
        v = cuts[a]
        b = a - 1
        while b >= 1 and cuts[b] > v:
            cuts[b + 1] = cuts[b]
            b -= 1
        cuts[b + 1] = v
    for j in range(nz):
        part = cuts[j + 1] - cuts[j]
        if uniform(key, ctr) < 0.5:
            part = -part
        ctr += 1
        out[perm[j]] = part
    return ctr


@njit(cache=True)
def sample_point(key, ctr, alias_prob, alias_idx, T, fp, ip, out):
    k, ctr = sample_radius(key, ctr, alias_prob, alias_idx, T, fp, ip)
    return shell_point(key, ctr, ip[0], k, out)


@njit(cache=True)
def _sample_many(key, ctr, alias_prob, alias_idx, T, fp, ip, out):
    buf = np.zeros(out.shape[1], dtype=np.int64)
    for n in range(out.shape[0]):
        ctr = sample_point(key, ctr, alias_prob, alias_idx, T, fp, ip, buf)
        for j in range(out.shape[1]):
            out[n, j] = buf[j]
    return ctr

"""Numerical versions of the analytic bounds and the phase classifier.

Multiplicative constants that are only known to exist are set to 1 and
o(1) terms are dropped; outputs built that way carry ``leading_order=True``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize

from .errors import AnsatzInfeasible, DivergentSum
from .kernel import Kernel, LogPower, Unit, rate

SNAP_TOL = 1e-12


# --------------------------------------------------------------------------
# sums of independent exponentials


def _rates(rates) -> np.ndarray:
    r = np.asarray(rates, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("need at least one rate")
    if np.any(r <= 0):
        raise ValueError("rates must be positive")
    return r


def exp_sum_lower_tail_bounds(rates, t: float) -> tuple[float, float]:
    """Bounds on P(sum X_i / lambda_i <= t) for i.i.d. unit exponentials X_i."""
    r = _rates(rates)
    if t < 0:
        raise ValueError("t must be nonnegative")
    k = r.size
    if t == 0:
        return 0.0, 0.0
    lower = float(np.exp(np.sum(np.log(r * t) - np.log(k + r * t))))
    log_upper = k * math.log(math.e * t / k) + float(np.sum(np.log(r)))
    upper = 1.0 if log_upper >= 0 else math.exp(log_upper)
    return lower, upper


def exp_sum_upper_tail_bound(rates, lambda_min: float, t: float) -> float:
    """Bound on P(sum X_i / lambda_i >= t), valid for t >= sum 1/lambda_i."""
    r = _rates(rates)
    if not 0 < lambda_min <= r.min() * (1 + 1e-12):
        raise ValueError("lambda_min must be positive and at most min(rates)")
    mean = float(np.sum(1 / r))
    if t < mean * (1 - 1e-12):
        raise ValueError(f"upper-tail bound needs t >= sum of means ({mean})")
    t = max(t, mean)
    return math.exp(-lambda_min * (t - mean) ** 2 / (2 * t))


def joint_lower_tail_bound(rates, k: int, m: int, t: float) -> float:
    """Bound on P(S_1 <= t, S_2 <= t) for two sums sharing their first m terms.

    S_1 uses rates[0:k], S_2 uses rates[0:m] and rates[k:2k-m].
    """
    r = _rates(rates)
    if not (k > m >= 0):
        raise ValueError("need k > m >= 0")
    if r.size != 2 * k - m:
        raise ValueError(f"need {2 * k - m} rates, got {r.size}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    log_b = (2 * k - m) * math.log(math.e * t) - (2 * k - 2 * m) * math.log(k - m) + float(np.sum(np.log(r)))
    if m > 0:
        log_b -= m * math.log(m)
    return 1.0 if log_b >= 0 else math.exp(log_b)


# --------------------------------------------------------------------------
# path sums


def s_k_bruteforce(kernel: Kernel, k: int, x, box_radius: int, budget: float = 2e7) -> float:
    """Sum over k-edge walks 0 -> x inside {-R..R}^d of prod r(|e|_1).

    Consecutive vertices differ; vertices may repeat.  Restricting the
    intermediate vertices to the box gives a lower bound on the Z^d sum.
    """
    from .exactfpp import BoxSpec

    x = np.asarray(x, dtype=np.int64).reshape(kernel.d)
    if k < 1:
        raise ValueError("k must be >= 1")
    if not np.any(x):
        raise ValueError("x must differ from the origin")
    if k == 1:
        return float(rate(kernel, int(np.abs(x).sum())))
    box = BoxSpec(kernel.d, box_radius, budget=math.inf)
    n = box.size
    cost = n if k == 2 else n ** (k - 1)
    if k > 3 or cost > budget:
        raise ValueError(f"s_k_bruteforce refuses k={k} on {n} sites (cost {cost:.3g} > budget {budget:.3g})")
    if np.abs(x).max() > box_radius:
        raise ValueError("x must lie inside the box")
    sites = box.sites()
    r0 = _rate_or_zero(kernel, np.abs(sites).sum(axis=1))
    rx = _rate_or_zero(kernel, np.abs(sites - x).sum(axis=1))
    if k == 2:
        return float(np.sum(r0 * rx))
    # k == 3: w[y2] = sum_{y1} r(|y1|) r(|y2 - y1|)
    w = np.zeros(n)
    for i in range(n):
        if r0[i] == 0:
            continue
        w += r0[i] * _rate_or_zero(kernel, np.abs(sites - sites[i]).sum(axis=1))
    return float(np.sum(w * rx))


def _rate_or_zero(kernel: Kernel, dist: np.ndarray) -> np.ndarray:
    out = np.zeros(dist.shape)
    nz = dist > 0
    out[nz] = rate(kernel, dist[nz])
    return out


def s_k_predicted_order(alpha: float, d: int, k: int, n: float, slowvary=None) -> float:
    """Scaling shape (no constants) of the k-edge path sum at distance n."""
    slowvary = slowvary or Unit()
    if alpha <= (k - 1) * d / k:
        raise DivergentSum(f"k={k}-edge path sum diverges for alpha={alpha} <= (k-1)d/k={(k - 1) * d / k}")
    if alpha > d or (alpha == d and isinstance(slowvary, LogPower)):
        return float(rate(Kernel(d, alpha, slowvary), n))
    if alpha < d:
        return float(n) ** ((k - 1) * d - k * alpha)
    raise DivergentSum("alpha = d with L = 1: the radial integral diverges and no power shape applies")


def _radial_integral(fun, lo: float, hi: float) -> float:
    val, _ = integrate.quad(fun, lo, hi, epsrel=1e-6, epsabs=0.0, limit=200)
    return float(val)


def convolution_bound_rhs(kernel_r: Kernel, kernel_q: Kernel, x) -> float:
    """Three-integral majorant for sum_y r(|x - y|) q(|y|), constant omitted."""
    d = kernel_r.d
    if kernel_q.d != d:
        raise ValueError("kernels must live in the same dimension")
    n = float(np.abs(np.asarray(x)).sum())
    if n < 1:
        raise ValueError("x must differ from the origin")
    rr = lambda s: s ** (-kernel_r.alpha) * kernel_r.slowvary(s)  # noqa: E731
    qq = lambda s: s ** (-kernel_q.alpha) * kernel_q.slowvary(s)  # noqa: E731
    a = kernel_r.alpha + kernel_q.alpha
    p = kernel_r.slowvary.p + kernel_q.slowvary.p
    if a < d or (a == d and p <= 1):
        raise DivergentSum("the outer integral of s^(d-1) r q diverges")
    i1 = _radial_integral(lambda s: s ** (d - 1) * qq(s), 1, n) if n > 1 else 0.0
    i2 = _radial_integral(lambda s: s ** (d - 1) * rr(s), 1, n) if n > 1 else 0.0
    i3 = _radial_integral(lambda s: s ** (d - 1) * rr(s) * qq(s), n, math.inf)
    return float(rr(n) * i1 + qq(n) * i2 + i3)


# --------------------------------------------------------------------------
# multi-scale ansatz


@dataclass(frozen=True)
class GeometricA:
    """f(x) = x / a."""

    a: float

    def f_values(self, n: float, k: int) -> np.ndarray:
        return n / self.a ** np.arange(k + 1, dtype=float)

    def check(self):
        if not self.a > 2:
            raise AnsatzInfeasible(f"GeometricA needs a > 2, got {self.a}")


@dataclass(frozen=True)
class SlidingA:
    """f(x) = x / a_n with a_n = n^(1/(k0 + 2d)) fixed by the target distance."""

    a_n: float

    def f_values(self, n: float, k: int) -> np.ndarray:
        return n / self.a_n ** np.arange(k + 1, dtype=float)

    def check(self):
        if not self.a_n > 2:
            raise AnsatzInfeasible(f"SlidingA needs a_n > 2, got {self.a_n}")

    @classmethod
    def for_distance(cls, n: float, d: int) -> tuple["SlidingA", int]:
        k0 = math.floor(math.sqrt(2 * d * math.log2(n)) - 2 * d)
        if k0 < 1:
            raise AnsatzInfeasible(f"n={n} too small for the sliding scheme (k0={k0})")
        return cls(n ** (1 / (k0 + 2 * d))), k0


@dataclass(frozen=True)
class PowerGamma:
    """f(x) = x^g."""

    g: float

    def f_values(self, n: float, k: int) -> np.ndarray:
        return float(n) ** (self.g ** np.arange(k + 1, dtype=float))

    def check(self):
        if not 0 < self.g < 1:
            raise AnsatzInfeasible(f"PowerGamma needs 0 < g < 1, got {self.g}")


AnsatzScheme = GeometricA | SlidingA | PowerGamma


@dataclass(frozen=True)
class AnsatzResult:
    scheme: object
    k: int
    n: float
    Lambda: float
    lambda_small: float
    f: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def tail(self, t: float) -> float:
        """Bound on P(T(0, x) >= (1 + t) Lambda)."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        return math.exp(-t * t * self.Lambda * self.lambda_small / (2 * (t + 1)))

    @property
    def scheme_name(self) -> str:
        return type(self.scheme).__name__


def scheme_levels(scheme, n: float, k: int) -> np.ndarray:
    """f_0 = n, f_1..f_k; raises AnsatzInfeasible when not admissible."""
    if k < 1:
        raise AnsatzInfeasible("the multi-scale path needs k >= 1")
    scheme.check()
    f = scheme.f_values(float(n), k)
    if f[k] < 1 - 1e-9:
        raise AnsatzInfeasible(f"f_k = {f[k]:.4g} < 1 at k={k}")
    if np.any(np.diff(f) >= 0):
        raise AnsatzInfeasible("scale sequence must be strictly decreasing")
    return f


def ansatz_evaluate(alpha: float, d: int, scheme, k: int, n: float, c: float = 1.0) -> AnsatzResult:
    f = scheme_levels(scheme, n, k)
    i = np.arange(1, k + 1)
    terms = (f[:-1] + 2 * f[1:]) ** alpha * f[1:] ** (-2.0 * d)
    Lam = c * float(np.sum(2.0 ** (i - 1) * terms)) + 2.0**k * float(f[k])
    lam = 1.0 / (1.0 + float(terms.max()))
    return AnsatzResult(scheme, int(k), float(n), Lam, lam, tuple(float(v) for v in f),
                        {"c": c, "leading_order": True})


def a0_optimal(alpha: float, d: int) -> float:
    """argmin over a^(alpha-2d) > 2 of (a+2)^alpha / (a^(alpha-2d) - 2)."""
    e = alpha - 2 * d
    if not 0 < e:
        raise ValueError("a0 is defined for alpha > 2d")
    lo = 2 ** (1 / e)
    obj = lambda a: alpha * math.log(a + 2) - math.log(a**e - 2)  # noqa: E731
    # coarse logarithmic grid to bracket the minimum, then golden section
    grid = lo * np.exp(np.linspace(1e-6, math.log(1e6), 2001))
    vals = np.array([obj(a) for a in grid])
    j = int(np.argmin(vals))
    if j == 0 or j == len(grid) - 1:
        raise ValueError("a0 bracket search failed")
    res = optimize.minimize_scalar(obj, bracket=(grid[j - 1], grid[j], grid[j + 1]), method="golden",
                                   tol=1e-12)
    return float(res.x)


def ansatz_optimize(alpha: float, d: int, n: float) -> AnsatzResult:
    """Case-matched scheme and depth for target distance n."""
    if not d < alpha < 2 * d + 1:
        raise ValueError(f"ansatz optimizer needs alpha in (d, 2d+1) = ({d}, {2 * d + 1}), got {alpha}")
    if n < 2:
        raise AnsatzInfeasible("target distance must be at least 2")
    if alpha > 2 * d:
        a0 = a0_optimal(alpha, d)
        k = math.floor(math.log(n) / math.log(a0))
        if k < 1:
            raise AnsatzInfeasible(f"n={n} < a0={a0:.3f}: no admissible level")
        res = ansatz_evaluate(alpha, d, GeometricA(a0), k, n)
        res.meta.update(case=1, a0=a0, A0=(a0 + 2) ** alpha / (a0 ** (alpha - 2 * d) - 2))
        return res
    if alpha == 2 * d:
        scheme, k0 = SlidingA.for_distance(n, d)
        res = ansatz_evaluate(alpha, d, scheme, k0, n)
        res.meta.update(case=2, a_n=scheme.a_n)
        return res
    g = alpha / (2 * d)
    if math.log(n) <= 1:
        raise AnsatzInfeasible("n too small for the power scheme")
    k = math.floor(math.log(math.log(n)) / math.log(2 * d / alpha))
    if k < 1:
        raise AnsatzInfeasible(f"n={n} too small for the power scheme (k={k})")
    res = ansatz_evaluate(alpha, d, PowerGamma(g), k, n)
    res.meta.update(case=3, g=g, delta=math.log(2) / math.log(2 * d / alpha))
    return res


# --------------------------------------------------------------------------
# self-bounding recursion


def _check_theta(theta, lam, beta, c):
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if c < 1:
        raise ValueError("c must be >= 1")


def _geom_ratio(theta: float, k: float) -> float:
    """((2 theta)^k - 1) / (2 theta - 1), read as k at theta = 1/2."""
    if theta == 0.5:
        return float(k)
    if math.isinf(k):
        if 2 * theta < 1:
            return 1 / (1 - 2 * theta)
        return math.inf
    return math.expm1(k * math.log(2 * theta)) / (2 * theta - 1)


def recursion_bound(lam: float, theta: float, beta: float, c: float, t: float, k) -> float:
    """Upper bound on log g(t) after k rounds of the self-bounding recursion.

    ``k`` may be ``math.inf`` (the limit, finite only for theta < 1/2).
    """
    _check_theta(theta, lam, beta, c)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not (k == math.inf or (float(k).is_integer() and k >= 0)):
        raise ValueError("k must be a nonnegative integer or inf")
    log_c = math.log(c) + math.log1p(t**beta)
    if math.isinf(k):
        if theta >= 0.5:
            return math.inf
        return theta * log_c / (1 - 2 * theta)
    return theta * _geom_ratio(theta, k) * log_c + lam * theta**k * t


def recursion_min(lam: float, theta: float, beta: float, c: float, t: float, k_max: int = 400) -> tuple[float, int]:
    """min over k in 0..k_max of the recursion bound, with the minimizing k."""
    vals = [recursion_bound(lam, theta, beta, c, t, k) for k in range(k_max + 1)]
    j = int(np.argmin(vals))
    return float(vals[j]), j


def c_theta(theta: float) -> float:
    """Constant with log_theta(c_theta) = -1 + log2(1 - 1/(2 theta)), theta > 1/2."""
    if not 0.5 < theta < 1:
        raise ValueError("c_theta is defined for theta in (1/2, 1)")
    return theta ** (-1 + math.log2(1 - 1 / (2 * theta)))


def g_envelope(theta: float, beta: float, lam: float):
    """Leading-order log G(t) bounding solutions of the self-bounding inequality."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if beta <= 0 and theta == 0.5:
        raise ValueError("beta must be positive at theta = 1/2")

    if theta < 0.5:
        def log_G(t):
            return theta / (1 - 2 * theta) * np.log1p(np.asarray(t, dtype=float) ** beta)
    elif theta == 0.5:
        def log_G(t):
            return np.log1p(np.asarray(t, dtype=float) ** beta) ** 2 / (beta * math.log(2))
    else:
        ct = c_theta(theta)

        def log_G(t):
            t = np.asarray(t, dtype=float)
            return ct * (2 * lam * t) ** math.log2(2 * theta) * np.log1p(t**beta) ** math.log2(1 / theta)
    log_G.leading_order = True
    return log_G


def _trap_selfconv(g: np.ndarray, h: float) -> float:
    prod = g * g[::-1]
    return h * (prod.sum() - 0.5 * (prod[0] + prod[-1]))


def self_bounding_ratio(theta: float, beta: float, lam: float, c: float, t: float, nodes: int = 1000) -> float:
    """G(t)^(1/theta) / (c (1 + t^(beta-1) int_0^t G(y) G(t-y) dy)) for the envelope G."""
    log_G = g_envelope(theta, beta, lam)
    y = np.linspace(0.0, t, nodes + 1)
    G = np.exp(log_G(y))
    conv = _trap_selfconv(G, y[1] - y[0])
    lhs = math.exp(float(log_G(t)) / theta)
    return lhs / (c * (1 + t ** (beta - 1) * conv))


def extremal_solution(theta: float, beta: float, lam: float, c: float, t_max: float, nodes: int = 1000):
    """Largest g on a grid with g <= e^(lam t) and g^(1/theta) <= c(1 + t^(beta-1) g*g(t)).

    Solved forward in t by trapezoid quadrature; the endpoint terms make each
    node an implicit equation, resolved by monotone fixed-point iteration.
    """
    _check_theta(theta, lam, beta, c)
    t = np.linspace(0.0, t_max, nodes + 1)
    h = t[1] - t[0]
    g = np.ones(nodes + 1)
    for i in range(1, nodes + 1):
        cap = math.exp(min(lam * t[i], 700.0))
        gi = g[i - 1]
        for _ in range(500):
            g[i] = gi
            conv = _trap_selfconv(g[: i + 1], h)
            new = min(cap, (c * (1 + t[i] ** (beta - 1) * conv)) ** theta)
            done = abs(new - gi) <= 1e-13 * new
            gi = new
            if done:
                break
        g[i] = gi
    return t, g


def envelope_inflation(theta: float, beta: float, lam: float, c: float, ts, nodes: int = 1000) -> dict:
    """Smallest kappa with g(t) <= kappa G(t) at each t in ``ts`` for the extremal g."""
    log_G = g_envelope(theta, beta, lam)
    out = {}
    for t in ts:
        _, g = extremal_solution(theta, beta, lam, c, float(t), nodes)
        out[float(t)] = float(g[-1] / math.exp(float(log_G(t))))
    return out


# --------------------------------------------------------------------------
# passage-time lower tail and phases


def passage_lower_tail_bound(alpha: float, d: int, x_norm: float, t: float) -> float:
    """Leading-order upper bound on log P(T(0, x) <= t) (constants set to 1 / 0)."""
    if not alpha > d:
        raise ValueError("the lower-tail bound needs alpha > d")
    if x_norm < 1 or t < 0:
        raise ValueError("need |x| >= 1 and t >= 0")
    lt = math.log1p(t)
    if alpha < 2 * d:
        g = math.log2(2 * d / alpha)
        return lt ** (1 - g) * t**g - alpha * math.log(x_norm)
    if alpha == 2 * d:
        return (4 * d + 2) / math.log(2) * lt**2 - alpha * math.log(x_norm)
    return alpha * ((1 + alpha) / (alpha - 2 * d) * lt - math.log(x_norm))


REGIMES = ("Instantaneous", "Exponential", "StretchedExponential", "LogCorrected2d", "Superlinear",
           "CriticalLinearEdge", "Linear")


@dataclass(frozen=True)
class PhaseReport:
    regime: str
    thresholds: tuple
    delta_exponent: float | None = None
    gamma_exponent: float | None = None
    snapped: bool = False
    note: str = ""

    def as_dict(self) -> dict:
        out = {"regime": self.regime, "thresholds": list(self.thresholds)}
        if self.delta_exponent is not None:
            out["delta"] = self.delta_exponent
        if self.gamma_exponent is not None:
            out["Gamma"] = self.gamma_exponent
        if self.snapped:
            out["snapped"] = True
        if self.note:
            out["note"] = self.note
        return out


def phase_classify(alpha: float, d: int, gamma: float = 1.0) -> PhaseReport:
    """Growth regime from the position of alpha relative to d*g, 2d*g, 2d*g + 1."""
    if not (alpha > 0 and d >= 1 and gamma > 0):
        raise ValueError("need alpha > 0, d >= 1, gamma > 0")
    a = Fraction(alpha)
    g = Fraction(gamma)
    cuts = (d * g, 2 * d * g, 2 * d * g + 1)
    snapped = False
    for cut in cuts:
        if a != cut and abs(float(a - cut)) <= SNAP_TOL:
            a = cut
            snapped = True
    thresholds = tuple(float(c) for c in cuts)
    lo, mid, hi = cuts
    af = float(a)
    if a < lo:
        return PhaseReport("Instantaneous", thresholds, snapped=snapped)
    if a == lo:
        return PhaseReport("Exponential", thresholds, snapped=snapped,
                           note="needs a slowly varying factor making the kernel summable; with L = 1 growth is instantaneous")
    if a < mid:
        return PhaseReport("StretchedExponential", thresholds,
                           delta_exponent=math.log(2) / math.log(float(mid) / af), snapped=snapped)
    if a == mid:
        return PhaseReport("LogCorrected2d", thresholds, snapped=snapped)
    if a < hi:
        return PhaseReport("Superlinear", thresholds, gamma_exponent=float(a - mid), snapped=snapped)
    if a == hi:
        return PhaseReport("CriticalLinearEdge", thresholds, snapped=snapped, note="growth rate at this edge is open")
    return PhaseReport("Linear", thresholds, snapped=snapped)

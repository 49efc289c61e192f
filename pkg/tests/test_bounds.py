import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from lrfpp import bounds as B
from lrfpp.errors import AnsatzInfeasible, DivergentSum
from lrfpp.growth import first_passage_samples, hit_indicators
from lrfpp.kernel import Kernel, rate

rates_st = st.lists(st.floats(0.05, 20), min_size=1, max_size=6)


def _erlang_cdf(rates, t):
    """P(sum X_i / lambda_i <= t) for distinct rates (hypoexponential) or equal ones."""
    r = np.asarray(rates, float)
    if np.allclose(r, r[0]):
        return stats.gamma.cdf(t, len(r), scale=1 / r[0])
    total = 0.0
    for i, ri in enumerate(r):
        others = np.delete(r, i)
        total += np.prod(others / (others - ri)) * math.exp(-ri * t)
    return 1 - total


def test_lower_tail_examples():
    lo, hi = B.exp_sum_lower_tail_bounds([2], 1)
    assert lo == pytest.approx(2 / 3) and hi == 1
    assert lo <= 1 - math.exp(-2) <= hi
    lo, hi = B.exp_sum_lower_tail_bounds([1, 1], 1)
    assert lo == pytest.approx(1 / 9) and hi == 1  # t^2 / ((2 + t)(2 + t))
    assert lo <= 1 - 2 / math.e <= hi
    assert B.exp_sum_lower_tail_bounds([3, 1, 2], 0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        B.exp_sum_lower_tail_bounds([], 1)


@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=4, unique=True), st.floats(0.01, 5))
@settings(max_examples=100, deadline=None)
def test_lower_tail_sandwich_exact(rates, t):
    r = np.array(rates)
    if len(r) > 1 and np.min(np.diff(np.sort(r))) < 0.05:
        return  # hypoexponential formula is ill-conditioned for near-equal rates
    lo, hi = B.exp_sum_lower_tail_bounds(rates, t)
    exact = _erlang_cdf(rates, t)
    assert lo <= hi
    assert lo - 1e-9 <= exact <= hi + 1e-9


def test_upper_tail_examples():
    assert B.exp_sum_upper_tail_bound([1, 1], 1, 4) == pytest.approx(math.exp(-0.5))
    assert 5 * math.exp(-4) <= B.exp_sum_upper_tail_bound([1, 1], 1, 4)
    assert B.exp_sum_upper_tail_bound([2, 2], 2, 3) == pytest.approx(math.exp(-4 / 3))
    assert B.exp_sum_upper_tail_bound([2, 4], 2, 0.75) == 1.0
    with pytest.raises(ValueError):
        B.exp_sum_upper_tail_bound([1, 1], 1, 1.5)
    with pytest.raises(ValueError):
        B.exp_sum_upper_tail_bound([1, 1], 2, 4)


def test_upper_tail_against_monte_carlo():
    rng = np.random.default_rng(0)
    rates = np.array([1.0, 2.0, 0.5])
    draws = (rng.exponential(size=(100_000, 3)) / rates).sum(axis=1)
    Lam = float(np.sum(1 / rates))
    for t in np.linspace(Lam, 4 * Lam, 7):
        p = np.mean(draws >= t)
        assert p <= B.exp_sum_upper_tail_bound(rates, 0.5, t) + 3 * math.sqrt(p * (1 - p) / len(draws))


def test_joint_bound_examples():
    assert B.joint_lower_tail_bound([1, 1], 1, 0, 0) == 0
    assert B.joint_lower_tail_bound([1, 1], 1, 0, 0.1) == pytest.approx((math.e * 0.1) ** 2)
    assert B.joint_lower_tail_bound([1, 1], 1, 0, 0.1) == pytest.approx(0.0739, abs=1e-4)
    b = B.joint_lower_tail_bound([1, 1, 1], 2, 1, 0.1)
    assert b == pytest.approx((math.e * 0.1) ** 3)
    rng = np.random.default_rng(1)
    e = rng.exponential(size=(1_000_000, 3))
    joint = np.mean((e[:, 0] + e[:, 1] <= 0.1) & (e[:, 0] + e[:, 2] <= 0.1))
    assert joint <= b
    with pytest.raises(ValueError):
        B.joint_lower_tail_bound([1, 1], 2, 1, 0.1)


@given(st.lists(st.floats(0.2, 5), min_size=3, max_size=3), st.floats(0, 3))
@settings(max_examples=50, deadline=None)
def test_joint_bound_is_capped_probability(rates, t):
    b = B.joint_lower_tail_bound(rates, 2, 1, t)
    assert 0 <= b <= 1


def test_s_k_single_edge_and_two_edge_sum():
    k = Kernel(1, 3.0)
    assert B.s_k_bruteforce(k, 1, (7,), 64) == rate(k, 7)
    y = np.arange(-64, 65)
    y = y[(y != 0) & (y != 4)]
    direct = float(np.sum(np.abs(y) ** -3.0 * np.abs(4 - y) ** -3.0))
    assert B.s_k_bruteforce(k, 2, (4,), 64) == pytest.approx(direct, rel=1e-12)


def test_s_k_three_edges_against_loops():
    k = Kernel(1, 2.0)
    R = 6
    sites = [s for s in range(-R, R + 1)]
    direct = 0.0
    for a in sites:
        for b in sites:
            if a != 0 and b != a and b != 3:
                direct += rate(k, abs(a)) * rate(k, abs(b - a)) * rate(k, abs(3 - b))
    assert B.s_k_bruteforce(k, 3, (3,), R) == pytest.approx(direct, rel=1e-12)
    with pytest.raises(ValueError):
        B.s_k_bruteforce(k, 4, (3,), R)
    with pytest.raises(ValueError):
        B.s_k_bruteforce(k, 3, (3,), 3000)


def test_s_k_divergence_signature():
    radii = (50, 100, 200, 400, 800)
    # alpha = 0.4 <= d/2: partial sums grow like R^(1 - 2 alpha) = R^0.2, so the
    # increment over each doubling grows by 2^0.2
    div = [B.s_k_bruteforce(Kernel(1, 0.4), 2, (4,), R) for R in radii]
    inc = np.diff(div)
    assert np.all(inc > 0)
    assert np.allclose(inc[1:] / inc[:-1], 2**0.2, atol=0.03)
    # alpha = 0.75 > d/2: increments shrink geometrically
    conv = [B.s_k_bruteforce(Kernel(1, 0.75), 2, (4,), R) for R in radii]
    inc = np.diff(conv)
    assert np.all(inc[1:] < 0.8 * inc[:-1])


def test_s_k_predicted_order():
    assert B.s_k_predicted_order(3.0, 1, 2, 10) == rate(Kernel(1, 3.0), 10)
    assert B.s_k_predicted_order(0.75, 1, 2, 16) == pytest.approx(16**-0.5)
    with pytest.raises(DivergentSum):
        B.s_k_predicted_order(0.5, 1, 2, 10)
    with pytest.raises(DivergentSum):
        B.s_k_predicted_order(1.0, 1, 2, 10)


def test_convolution_rhs_value_and_symmetry():
    k3 = Kernel(1, 3.0)
    val = B.convolution_bound_rhs(k3, k3, (8,))
    expected = 2 * 8**-3 * (1 - 1 / 64) / 2 + 8.0**-5 / 5
    assert val == pytest.approx(expected, rel=1e-6)
    k2 = Kernel(1, 2.0)
    assert B.convolution_bound_rhs(k3, k2, (8,)) == pytest.approx(B.convolution_bound_rhs(k2, k3, (8,)), rel=1e-9)
    with pytest.raises(DivergentSum):
        B.convolution_bound_rhs(Kernel(2, 0.5), Kernel(2, 1.0), (3, 0))


def test_convolution_bound_fit_and_hold():
    r = Kernel(1, 3.0)
    q = Kernel(1, 2.0)
    ratios = []
    for n in (8, 16, 32):
        y = np.arange(-10 * n, 10 * n + 1)
        y = y[(y != 0) & (y != n)]
        lhs = float(np.sum(rate(r, np.abs(n - y)) * rate(q, np.abs(y))))
        ratios.append(lhs / B.convolution_bound_rhs(r, q, (n,)))
    C = ratios[0]
    assert all(c <= 1.5 * C for c in ratios[1:]), ratios


def test_ansatz_evaluate_examples():
    res = B.ansatz_evaluate(2.5, 1, B.GeometricA(10), 1, 10)
    assert res.Lambda == pytest.approx(12**2.5 + 2)
    assert 0 < res.lambda_small <= 1
    assert res.tail(0) == 1
    ts = np.linspace(0, 5, 30)
    tails = [res.tail(t) for t in ts]
    assert all(0 <= v <= 1 for v in tails) and np.all(np.diff(tails) <= 0)
    with pytest.raises(AnsatzInfeasible):
        B.ansatz_evaluate(2.5, 1, B.GeometricA(10), 2, 10)  # f_2 < 1
    with pytest.raises(AnsatzInfeasible):
        B.ansatz_evaluate(2.5, 1, B.GeometricA(1.5), 1, 10)


@given(st.floats(1.2, 2.9), st.floats(0.01, 0.5), st.integers(1, 4), st.floats(100, 1e6))
@settings(max_examples=60, deadline=None)
def test_ansatz_lambda_monotone_in_alpha(alpha, step, k, n):
    scheme = B.GeometricA(3.0)
    try:
        lo = B.ansatz_evaluate(alpha, 1, scheme, k, n)
    except AnsatzInfeasible:
        return
    hi = B.ansatz_evaluate(alpha + step, 1, scheme, k, n)
    assert hi.Lambda >= lo.Lambda


def test_a0_minimizes_the_case_one_objective():
    a0 = B.a0_optimal(2.5, 1)
    obj = lambda a: (a + 2) ** 2.5 / (a**0.5 - 2)  # noqa: E731
    grid = np.linspace(4.01, 60, 5000)
    assert obj(a0) <= obj(grid).min() * (1 + 1e-9)


def test_ansatz_optimize_flatness_case_one():
    ns = [2**e for e in range(10, 21)]
    vals = [B.ansatz_optimize(2.5, 1, n).Lambda / n**0.5 for n in ns]
    top = vals[-3:]
    assert max(top) / min(top) < 1.10


def test_ansatz_optimize_case_two_constant():
    n = 2.0**30
    res = B.ansatz_optimize(2.0, 1, n)
    assert res.scheme_name == "SlidingA"
    ratio = math.log(res.Lambda) / math.sqrt(2 * math.log(2) * math.log(n))
    assert abs(ratio / 2 - 1) < 0.15


def test_ansatz_optimize_case_three_band():
    delta = math.log(2) / math.log(4 / 3)
    vals = []
    for e in range(10, 31, 2):
        n = 2.0**e
        res = B.ansatz_optimize(3.0, 2, n)
        assert res.scheme_name == "PowerGamma"
        vals.append(res.Lambda / math.log(n) ** delta)
    assert max(vals) / min(vals) < 3


def test_ansatz_optimize_domain():
    with pytest.raises(ValueError):
        B.ansatz_optimize(3.5, 1, 1000)
    with pytest.raises(ValueError):
        B.ansatz_optimize(0.9, 1, 1000)


def test_ansatz_tail_bounds_passage_frequency():
    res = B.ansatz_optimize(2.5, 1, 256)
    T = first_passage_samples(Kernel(1, 2.5), [(256,)], 500, 21)[:, 0]
    freq = np.mean(T >= 2 * res.Lambda)
    bound = res.tail(1.0)
    assert freq <= bound + 3 * math.sqrt(bound * (1 - bound) / len(T))


def test_recursion_examples():
    assert B.recursion_bound(1.3, 0.25, 2, 1, 3.0, 0) == pytest.approx(1.3 * 3.0)
    lim = B.recursion_bound(1, 0.25, 2, 1, 3, math.inf)
    assert lim == pytest.approx(0.5 * math.log(10)) and lim == pytest.approx(1.1513, abs=1e-4)
    assert B.recursion_bound(1, 0.25, 2, 1, 3, 200) == pytest.approx(lim, abs=1e-12)
    assert B.recursion_bound(1, 0.5, 2, 1, 3, math.inf) == math.inf
    v, _ = B.recursion_min(1, 0.75, 2, 1, 1e4)
    scale = (2e4) ** math.log2(1.5) * math.log1p(1e8) ** math.log2(4 / 3)
    assert 0.2 <= v / scale <= 5
    with pytest.raises(ValueError):
        B.recursion_bound(1, 1.2, 2, 1, 3, 1)
    with pytest.raises(ValueError):
        B.recursion_bound(1, 0.5, 2, 0.5, 3, 1)


def test_recursion_half_uses_linear_ratio():
    v = B.recursion_bound(2.0, 0.5, 1.0, 3.0, 5.0, 4)
    assert v == pytest.approx(0.5 * 4 * math.log(3 * 6) + 2 * 0.5**4 * 5)


def test_envelope_closed_forms():
    t = np.array([1.0, 10.0])
    assert np.allclose(B.g_envelope(0.25, 2, 1)(t), 0.5 * np.log1p(t**2))
    assert np.allclose(B.g_envelope(0.5, 2, 1)(t), np.log1p(t**2) ** 2 / (2 * math.log(2)))
    ct = B.c_theta(0.75)
    assert math.log(ct) / math.log(0.75) == pytest.approx(-1 + math.log2(1 - 1 / 1.5))
    assert B.g_envelope(0.75, 2, 1)(10.0) == pytest.approx(ct * 20 ** math.log2(1.5) * math.log1p(100) ** math.log2(4 / 3))


def test_envelope_satisfies_self_bounding_inequality_after_inflation():
    ratios = [B.self_bounding_ratio(0.25, 2, 1, 2, t) for t in (1, 10, 100)]
    assert max(ratios) <= 4, ratios


def test_extremal_solution_respects_both_constraints():
    t, g = B.extremal_solution(0.5, 2, 1, 2, 5.0, nodes=200)
    h = t[1] - t[0]
    assert np.all(g <= np.exp(t) * (1 + 1e-12))
    for i in (50, 120, 200):
        conv = B._trap_selfconv(g[: i + 1], h)
        assert g[i] ** 2 <= 2 * (1 + t[i] * conv) * (1 + 1e-9)


def test_passage_lower_tail_examples():
    assert B.passage_lower_tail_bound(3, 1, 100, 2) == pytest.approx(3 * (4 * math.log(3) - math.log(100)))
    assert B.passage_lower_tail_bound(3, 1, 100, 2) == pytest.approx(-0.632, abs=1e-3)
    a, b = (B.passage_lower_tail_bound(3, 1, x, 2) for x in (1e3, 1e4))
    assert (b - a) / math.log(10) == pytest.approx(-3)
    assert B.passage_lower_tail_bound(2, 1, 10, 1) == pytest.approx(6 / math.log(2) * math.log(2) ** 2 - 2 * math.log(10))
    with pytest.raises(ValueError):
        B.passage_lower_tail_bound(1, 1, 10, 1)


def test_passage_lower_tail_empirical_slope():
    k = Kernel(1, 3.0)
    hits = hit_indicators(k, [(16,), (32,)], 1.0, 100_000, seed=22)
    p = hits.mean(axis=0)
    assert p[1] > 0
    slope = (math.log(p[1]) - math.log(p[0])) / math.log(2)
    assert slope <= -(3 - 0.5)


def test_phase_examples():
    assert B.phase_classify(1.5, 2, 1).regime == "Instantaneous"
    r = B.phase_classify(3, 2, 1)
    assert r.regime == "StretchedExponential" and r.delta_exponent == pytest.approx(2.4094, abs=1e-4)
    assert B.phase_classify(5.5, 2, 1).regime == "Linear"
    r = B.phase_classify(4.5, 1, 2)
    assert r.regime == "Superlinear" and r.gamma_exponent == pytest.approx(0.5)
    assert B.phase_classify(4, 2, 1).regime == "LogCorrected2d"
    assert B.phase_classify(2, 2, 1).regime == "Exponential" and B.phase_classify(2, 2, 1).note
    assert B.phase_classify(5, 2, 1).regime == "CriticalLinearEdge"
    r = B.phase_classify(4 + 1e-13, 2, 1)
    assert r.regime == "LogCorrected2d" and r.snapped
    assert not B.phase_classify(4, 2, 1).snapped


@given(st.floats(0.01, 20), st.integers(1, 4), st.floats(0.2, 3))
@settings(max_examples=300, deadline=None)
def test_phase_partition_and_exponent_ranges(alpha, d, gamma):
    r = B.phase_classify(alpha, d, gamma)
    assert r.regime in B.REGIMES
    lo, mid, hi = r.thresholds
    assert lo < mid < hi
    assert (r.delta_exponent is not None) == (r.regime == "StretchedExponential")
    assert (r.gamma_exponent is not None) == (r.regime == "Superlinear")
    if r.delta_exponent is not None:
        assert r.delta_exponent > 1
    if r.gamma_exponent is not None:
        assert 0 < r.gamma_exponent < 1


def test_inverse_delta_decreases_from_one_to_zero():
    d = 2
    alphas = np.linspace(2.0001, 3.9999, 200)
    inv = [1 / B.phase_classify(a, d).delta_exponent for a in alphas]
    assert np.all(np.diff(inv) < 0)
    assert inv[0] == pytest.approx(1, abs=1e-3) and inv[-1] == pytest.approx(0, abs=1e-3)

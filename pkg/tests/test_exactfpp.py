import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lrfpp.bounds import GeometricA, a0_optimal
from lrfpp.errors import AnsatzInfeasible
from lrfpp.exactfpp import BoxSpec, WeightOracle, dijkstra_times, multiscale_path, passage_time
from lrfpp.growth import hit_indicators
from lrfpp.kernel import Kernel, rate


@given(st.integers(1, 3), st.integers(0, 5), st.data())
@settings(max_examples=50, deadline=None)
def test_box_index_roundtrip(d, R, data):
    box = BoxSpec(d, R)
    i = data.draw(st.integers(0, box.size - 1))
    assert box.index(box.site(i)) == i
    assert tuple(box.sites()[i]) == box.site(i)


def test_box_budget_and_bounds():
    with pytest.raises(ValueError):
        BoxSpec(2, 100)
    box = BoxSpec(1, 3)
    with pytest.raises(ValueError):
        box.index((4,))


def test_weights_symmetric_deterministic_positive():
    o = WeightOracle(BoxSpec(2, 4), Kernel(2, 3.0), seed=1)
    o2 = WeightOracle(BoxSpec(2, 4), Kernel(2, 3.0), seed=1)
    for x, y in [((0, 0), (1, 2)), ((-4, 4), (3, -1))]:
        assert o.weight(x, y) == o.weight(y, x) == o2.weight(x, y) > 0
    assert o.weight((0, 0), (1, 0)) != o.replica(1).weight((0, 0), (1, 0))
    with pytest.raises(ValueError):
        o.weight((1, 1), (1, 1))


def _scaled_weights(gamma, n_rep):
    k = Kernel(1, 2.0, gamma=gamma)
    box = BoxSpec(1, 25)
    vals = []
    for r in range(n_rep):
        o = WeightOracle(box, k, seed=2, index=r)
        for i, j in itertools.combinations(range(box.size), 2):
            vals.append(o.weight_by_index(i, j) * rate(k, abs(i - j)))
    return np.array(vals)


def test_weight_law_gamma_one():
    w = _scaled_weights(1.0, 80)
    assert len(w) >= 100_000
    assert stats.kstest(w, "expon").pvalue > 0.01


def test_weight_law_gamma_two():
    w = _scaled_weights(2.0, 80)
    assert stats.kstest(np.sqrt(w), "expon").pvalue > 0.01


def test_trivial_distance_maps():
    o = WeightOracle(BoxSpec(2, 0), Kernel(2, 3.0), seed=0)
    assert dijkstra_times(o).tolist() == [0.0]
    o = WeightOracle(BoxSpec(1, 5), Kernel(1, 2.0), seed=0)
    assert dijkstra_times(o)[o.box.index((0,))] == 0.0


def _brute_force(o, src, dst):
    n = o.box.size
    best = math.inf
    others = [v for v in range(n) if v not in (src, dst)]
    for m in range(len(others) + 1):
        for mid in itertools.permutations(others, m):
            path = (src,) + mid + (dst,)
            best = min(best, sum(o.weight_by_index(a, b) for a, b in zip(path, path[1:])))
    return best


@given(st.integers(0, 10_000), st.sampled_from([0.5, 2.0, 4.0]), st.sampled_from([0.5, 1.0, 2.0]))
@settings(max_examples=15, deadline=None)
def test_dijkstra_equals_path_enumeration(seed, alpha, gamma):
    o = WeightOracle(BoxSpec(1, 3), Kernel(1, alpha, gamma=gamma), seed=seed)  # 7 sites
    dist = dijkstra_times(o, (0,))
    for x in (-3, 1, 2):
        assert dist[o.box.index((x,))] == pytest.approx(_brute_force(o, o.box.index((0,)), o.box.index((x,))))


def test_metric_properties():
    o = WeightOracle(BoxSpec(2, 6), Kernel(2, 3.0), seed=3)
    n = o.box.size
    rng = np.random.default_rng(0)
    sites = [o.box.site(int(i)) for i in rng.choice(n, 30, replace=False)]
    maps = {s: dijkstra_times(o, s) for s in sites}
    idx = {s: o.box.index(s) for s in sites}
    for _ in range(100):
        a, b, c = (sites[i] for i in rng.choice(len(sites), 3, replace=False))
        assert maps[a][idx[c]] <= maps[a][idx[b]] + maps[b][idx[c]] + 1e-12
        assert maps[a][idx[b]] == pytest.approx(maps[b][idx[a]], rel=1e-12)
    again = dijkstra_times(WeightOracle(BoxSpec(2, 6), Kernel(2, 3.0), seed=3), sites[0])
    assert np.array_equal(again, maps[sites[0]])


def test_target_early_stop_is_exact_at_target():
    o = WeightOracle(BoxSpec(1, 40), Kernel(1, 2.5), seed=4)
    full = dijkstra_times(o)
    assert passage_time(o, (17,)) == full[o.box.index((17,))]


@pytest.fixture(scope="module")
def a0():
    return a0_optimal(2.5, 1)


def test_multiscale_path_contract(a0):
    o = WeightOracle(BoxSpec(1, 300), Kernel(1, 2.5), seed=5)
    with pytest.raises(AnsatzInfeasible):
        multiscale_path(o, (128,), GeometricA(a0), 0)
    with pytest.raises(AnsatzInfeasible):
        multiscale_path(o, (290,), GeometricA(a0), 2)  # top balls leave the box
    path, W = multiscale_path(o, (128,), GeometricA(a0), 2)
    assert path[0] == (0,) and path[-1] == (128,)
    recomputed = sum(o.weight(a, b) for a, b in zip(path, path[1:]))
    assert W == pytest.approx(recomputed, rel=1e-12)
    assert W >= passage_time(o, (128,))


def test_multiscale_path_in_two_dimensions():
    o = WeightOracle(BoxSpec(2, 30), Kernel(2, 4.5), seed=6)
    a = a0_optimal(4.5, 2)
    path, W = multiscale_path(o, (16, -9), GeometricA(a), 1)
    assert path[0] == (0, 0) and path[-1] == (16, -9)
    assert W >= passage_time(o, (16, -9))


def test_multiscale_scale_stability(a0):
    k = Kernel(1, 2.5)
    box = BoxSpec(1, 1200)
    med = {}
    for n in (512, 1024):
        depth = math.floor(math.log(n) / math.log(a0))
        w = [multiscale_path(WeightOracle(box, k, seed=7, index=r), (n,), GeometricA(a0), depth)[1]
             for r in range(100)]
        med[n] = np.median(w) / n**0.5
    ratio = med[1024] / med[512]
    assert 0.25 <= ratio <= 4, med


def test_lower_tail_consistent_with_rate_times_exponential():
    # P(T(0,x) <= t) <= (e^{ct} - 1) r(|x|): c fitted at |x| = 4, then re-checked
    k = Kernel(1, 3.0)
    n = 5000
    probes = [(4,), (8,), (16,)]
    ts = (0.5, 1.0)
    p = {t: hit_indicators(k, probes, t, n, seed=8).mean(axis=0) for t in ts}
    c = max(math.log1p(p[t][0] / rate(k, 4)) / t for t in ts)
    for t in ts:
        for q, x in enumerate((4, 8, 16)):
            bound = math.expm1(c * t) * rate(k, x)
            slack = 3 * math.sqrt(max(bound * (1 - bound), 1 / n) / n)
            assert p[t][q] <= bound + slack, (t, x, p[t][q], bound)

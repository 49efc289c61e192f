import math

import numpy as np
import pytest
from lrfpp import analysis
from lrfpp.errors import InstantaneousRegime, UnsupportedDynamics
from lrfpp.growth import (
    Cadence,
    GrowthState,
    Occupied,
    StopRule,
    Thinned,
    first_passage_samples,
    init,
    occupation_times,
    run,
    step,
)
from lrfpp.kernel import Kernel, total_rate
from lrfpp.rng import Stream


def test_init_errors():
    with pytest.raises(InstantaneousRegime):
        init(Kernel(1, 0.9))
    with pytest.raises(UnsupportedDynamics):
        init(Kernel(2, 4.0, gamma=2.0))
    with pytest.raises(ValueError):
        GrowthState(Kernel(2, 3.5), Stream(0, "g"), engine="skip")
    with pytest.raises(ValueError):
        StopRule()


def test_fresh_state():
    st = init(Kernel(2, 3.5), Stream(0, "g"))
    assert st.n == 1 and st.clock == 0.0
    assert occupation_times(st) == {(0, 0): 0.0}


def test_first_event_time_and_target():
    k = Kernel(1, 2.0)
    lam = total_rate(k)
    n = 20_000
    times = np.empty(n)
    near = 0
    for r in range(n):
        st = init(k, Stream(1, "first", r))
        ev = step(st)
        assert isinstance(ev, Occupied)  # the origin is the only occupied site
        times[r] = ev.time
        near += abs(ev.site[0]) == 1
    se = 1 / lam / math.sqrt(n)
    assert abs(times.mean() - 1 / lam) < 2.5 * se
    p = 6 / math.pi**2
    assert abs(near / n - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_step_reports_thinning():
    st = init(Kernel(1, 4.0), Stream(2, "thin"))
    kinds = {type(step(st)) for _ in range(400)}
    assert kinds == {Occupied, Thinned}
    assert st.thinned_count > 0


def test_stop_max_volume_one():
    res = run(init(Kernel(2, 3.5), Stream(0, "g")), StopRule(max_volume=1))
    assert len(res.rows) == 1 and res.rows[0][1] == 1


@pytest.fixture(scope="module")
def grown():
    st = init(Kernel(2, 3.5), Stream(4, "grown"))
    res = run(st, StopRule(max_volume=5000))
    return st, res


def test_tree_and_time_invariants(grown):
    st, res = grown
    t = st.occupation_array()
    par = st.parents()
    assert par[0] < 0 and t[0] == 0.0
    assert np.all(par[1:] >= 0)
    assert np.all(t[par[1:]] < t[1:])
    assert np.all(np.diff(t) > 0) or st.tie_count > 0
    assert st.clock >= t.max()
    assert st.n == 5000 and res.stopped_by == "max_volume"


def test_tracked_statistics_match_recomputation(grown):
    st, res = grown
    assert st.diameter == analysis.diameter(st.sites())
    assert st.max_jump == analysis.max_jump(st.sites(), st.parents())
    rows = res.as_array()
    assert np.all(np.diff(rows[:, 0]) >= 0)
    assert np.all(np.diff(rows[:, 1]) >= 0) and np.all(np.diff(rows[:, 2]) >= 0)


def test_determinism_and_resume():
    k = Kernel(1, 2.5)
    a = init(k, Stream(5, "r"), engine="skip")
    run(a, StopRule(max_time=30.0))
    b = init(k, Stream(5, "r"), engine="skip")
    for t in (3.0, 10.0, 30.0):
        b.advance(t_stop=t)
    assert np.array_equal(a.sites(), b.sites())
    assert np.array_equal(a.occupation_array(), b.occupation_array())
    c = init(k, Stream(5, "r"))
    d = init(k, Stream(5, "r"))
    run(c, StopRule(max_volume=2000), Cadence(0.1, 2.0))
    run(d, StopRule(max_volume=2000))
    assert np.array_equal(c.occupation_array(), d.occupation_array())


def test_agent_clock_rescales_time():
    k = Kernel(2, 4.0)
    lam = total_rate(k)
    a = run(init(k, Stream(6, "c")), StopRule(max_time=2.0))
    b = run(init(k, Stream(6, "c")), StopRule(max_time=2.0 * lam), clock="agent")
    assert a.rows[-1][1:] == b.rows[-1][1:]
    assert b.rows[-1][0] == pytest.approx(a.rows[-1][0] * lam)


def test_skip_engine_matches_plain_in_law():
    k = Kernel(1, 4.0)
    a = first_passage_samples(k, [(8,)], 300, 10)
    b = first_passage_samples(k, [(8,)], 300, 10, engine="skip")
    assert analysis.ks_two_sample(a[:, 0], b[:, 0])[1] > 0.01
    k = Kernel(1, 1.5)
    va, vb, da, db = [], [], [], []
    for r in range(400):
        for eng, v, dd in (("plain", va, da), ("skip", vb, db)):
            st = init(k, Stream(11, "eng", r), engine=eng)
            st.advance(t_stop=0.5)
            v.append(st.n)
            dd.append(st.diameter)
    assert analysis.ks_two_sample(va, vb)[1] > 0.01
    assert analysis.ks_two_sample(da, db)[1] > 0.01


def test_mean_volume_non_increasing_in_alpha():
    # native time t = 1, 200 seeds per alpha
    means, ses = [], []
    for alpha in (3.0, 3.5, 4.0, 5.0):
        v = []
        for r in range(200):
            st = init(Kernel(2, alpha), Stream(12, "mono", r))
            st.advance(t_stop=1.0)
            v.append(st.n)
        v = np.array(v, dtype=float)
        means.append(v.mean())
        ses.append(v.std(ddof=1) / math.sqrt(len(v)))
    for i in range(3):
        assert means[i + 1] <= means[i] + 2 * math.hypot(ses[i], ses[i + 1])


def test_volume_growth_at_most_exponential():
    k = Kernel(2, 4.0)
    logs = []
    for t in (1.0, 2.0):
        v = []
        for r in range(200):
            st = init(k, Stream(13, "expo", r))
            st.advance(t_stop=t)
            v.append(st.n)
        logs.append(math.log(np.mean(v)))
    assert logs[1] <= 2.5 * logs[0] + 1.0


@pytest.mark.parametrize("x", [1, 4, 8])
def test_occupation_time_dominated_by_gamma(x):
    s = first_passage_samples(Kernel(1, 4.0), [(x,)], 1000, 14)
    res = analysis.gamma_domination(s[:, 0], x)
    assert res["ok"], res


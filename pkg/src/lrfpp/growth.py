"""Event-driven simulation of the dispersal process.

Every occupied site fires at total rate ``lambda`` and targets ``x + Y`` with
``Y`` drawn from the kernel's displacement law; firing onto an occupied site
is thinned.  For exponential weights this process has the same law as the
first-passage ball B_t.

Two engines are provided.

``plain``
    Gillespie with thinning: the next event comes after ``Exp(N * lambda)``,
    the source is uniform among the N occupied sites.  Exact for every d.

``skip``  (d = 1 only)
    Next-reaction scheme where a source only proposes targets outside the
    contiguous occupied run containing it at scheduling time; those targets
    are occupied forever, so dropping them is exact.  Runs only grow, so a
    stale schedule over-counts the useful rate and the surplus is thinned.
    In dense one-dimensional regimes this removes the ``1 - O(1/N)``
    thinning fraction that makes the plain engine quadratic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import UnsupportedDynamics
from .kernel import (
    Kernel,
    _envelope_constant,
    _envelope_mass,
    sample_point,
    sampler_for,
    tail_attempt,
)
from .rng import Stream, exponential, mix64, uniform

# status codes returned by the numba loops
TICK, MAX_TIME, MAX_VOLUME, MAX_DIAMETER, NEED_ROOM, PROBES, MAX_EVENTS = range(7)
STATUS_NAMES = {
    TICK: "tick",
    MAX_TIME: "max_time",
    MAX_VOLUME: "max_volume",
    MAX_DIAMETER: "max_diameter",
    PROBES: "probes",
    MAX_EVENTS: "max_events",
}

# integer scalar slots
I_N, I_EVENTS, I_THINNED, I_TIES, I_MAXJUMP, I_PROBES_HIT, I_CTR, I_HEAP = range(8)
# float scalar slots
F_CLOCK, F_NEXT = range(2)


@dataclass(frozen=True)
class StopRule:
    max_time: float | None = None
    max_volume: int | None = None
    max_diameter: int | None = None

    def __post_init__(self):
        if self.max_time is None and self.max_volume is None and self.max_diameter is None:
            raise ValueError("StopRule needs at least one bound")


@dataclass(frozen=True)
class Cadence:
    """Rows at t0 * factor**j, plus t = 0 and the final state."""

    t0: float = 0.01
    factor: float = 2 ** (1 / 8)

    def tick(self, j: int) -> float:
        return self.t0 * self.factor**j


@dataclass(frozen=True)
class Occupied:
    site: tuple
    time: float


@dataclass(frozen=True)
class Thinned:
    time: float


@dataclass
class GrowthRun:
    """Time series produced by :func:`run` (wrapped into a RunRecord by the cli)."""

    rows: list = field(default_factory=list)  # (t, volume, diameter, max_jump, thinned)
    stopped_by: str = ""
    truncated: bool = False
    events: int = 0
    ties: int = 0

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, 5)


def _signs(d: int) -> np.ndarray:
    """The 2^(d-1) sign vectors with first entry +1 (l1 diameter functionals)."""
    m = 1 << (d - 1)
    out = np.ones((m, d), dtype=np.int64)
    for j in range(m):
        for b in range(d - 1):
            if (j >> b) & 1:
                out[j, b + 1] = -1
    return out


class GrowthState:
    """Occupied sites, their occupation times and parents, plus engine state."""

    def __init__(self, kernel: Kernel, stream: Stream | None = None, engine: str = "plain", capacity: int = 1024):
        if kernel.gamma != 1.0:
            raise UnsupportedDynamics(
                f"dispersal dynamics need exponential weights (gamma = 1), got gamma={kernel.gamma}; "
                "use the exact first-passage oracle instead"
            )
        kernel.require_summable()
        if engine not in ("plain", "skip"):
            raise ValueError(f"unknown engine {engine!r}")
        if engine == "skip" and kernel.d != 1:
            raise ValueError("the skip-ahead engine is implemented for d = 1 only")
        self.kernel = kernel
        self.engine = engine
        self.sampler = sampler_for(kernel)
        self.lam = self.sampler.lam
        self.d = kernel.d
        self.stream = stream if stream is not None else Stream(0, "growth")
        self.signs = _signs(self.d)
        cap = max(16, int(capacity))
        self._alloc(cap)
        self.ist = np.zeros(8, dtype=np.int64)
        self.fst = np.zeros(2)
        self.fmax = np.zeros(len(self.signs), dtype=np.int64)
        self.fmin = np.zeros(len(self.signs), dtype=np.int64)
        # origin
        _insert_site(self.table, self.coords, np.zeros(self.d, dtype=np.int64), 0)
        self.parent[0] = -1
        self.ist[I_N] = 1
        self.ist[I_CTR] = self.stream.counter
        if engine == "skip":
            a = self.sampler.fp[0]
            p_env = self.sampler.fp[3]
            self.skip_fp = np.array([_envelope_constant(float(self.sampler.K + 1), 1, a, p_env, True)])
            self.ufp[0] = 0
            self.lo[0] = 0
            self.hi[0] = 0
            self.ist[I_HEAP] = 0
            _skip_schedule(self.stream.key, self.ist, self.fst, 0, 0.0, self.coords, self.ufp, self.lo, self.hi,
                           self.ml, self.mr, self.sl, self.sr, self.ht, self.hs,
                           self.sampler.one_sided_tail, self.sampler.fp, self.sampler.ip, self.skip_fp)
        else:
            self.fst[F_NEXT] = _first_time(self.stream.key, self.ist, self.lam)
        self.stream.sync(self.ist[I_CTR])

    # -- storage -----------------------------------------------------------

    def _alloc(self, cap: int) -> None:
        d = self.d
        self.coords = np.zeros((cap, d), dtype=np.int64)
        self.times = np.zeros(cap)
        self.parent = np.full(cap, -1, dtype=np.int64)
        self.table = np.full(4 * cap, -1, dtype=np.int64)
        if self.engine == "skip":
            self.ufp = np.zeros(cap, dtype=np.int64)
            self.lo = np.zeros(cap, dtype=np.int64)
            self.hi = np.zeros(cap, dtype=np.int64)
            self.ml = np.zeros(cap, dtype=np.int64)
            self.mr = np.zeros(cap, dtype=np.int64)
            self.sl = np.zeros(cap)
            self.sr = np.zeros(cap)
            self.ht = np.zeros(cap)
            self.hs = np.zeros(cap, dtype=np.int64)

    def _grow(self) -> None:
        n = self.n
        old = {name: getattr(self, name) for name in
               ("coords", "times", "parent", "ufp", "lo", "hi", "ml", "mr", "sl", "sr", "ht", "hs")
               if hasattr(self, name)}
        self._alloc(2 * len(self.times))
        for name, arr in old.items():
            getattr(self, name)[: len(arr)] = arr
        _rehash(self.table, self.coords, n)

    @property
    def n(self) -> int:
        return int(self.ist[I_N])

    @property
    def clock(self) -> float:
        return float(self.fst[F_CLOCK])

    @property
    def event_count(self) -> int:
        return int(self.ist[I_EVENTS])

    @property
    def thinned_count(self) -> int:
        return int(self.ist[I_THINNED])

    @property
    def tie_count(self) -> int:
        return int(self.ist[I_TIES])

    @property
    def max_jump(self) -> int:
        return int(self.ist[I_MAXJUMP])

    @property
    def diameter(self) -> int:
        return int(np.max(self.fmax - self.fmin))

    def sites(self) -> np.ndarray:
        return self.coords[: self.n].copy()

    def occupation_array(self) -> np.ndarray:
        return self.times[: self.n].copy()

    def parents(self) -> np.ndarray:
        return self.parent[: self.n].copy()

    def lookup(self, site) -> int:
        s = np.asarray(site, dtype=np.int64).reshape(self.d)
        return int(_find(self.table, self.coords, s))

    def occupation_time(self, site) -> float | None:
        i = self.lookup(site)
        return None if i < 0 else float(self.times[i])

    # -- driving -----------------------------------------------------------

    def advance(self, t_stop=math.inf, tick=math.inf, vol_stop=None, diam_stop=None, probes=None,
                max_events=None) -> int:
        """Process events until a stop condition; returns a status code."""
        vs = np.int64(vol_stop if vol_stop is not None else np.iinfo(np.int64).max)
        ds = np.int64(diam_stop if diam_stop is not None else np.iinfo(np.int64).max)
        me = np.int64(self.event_count + max_events if max_events is not None else np.iinfo(np.int64).max)
        pr = np.zeros((0, self.d), dtype=np.int64) if probes is None else np.asarray(probes, dtype=np.int64)
        smp = self.sampler
        while True:
            if self.engine == "plain":
                status = _advance_plain(
                    self.stream.key, self.ist, self.fst, self.coords, self.times, self.parent, self.table,
                    self.fmax, self.fmin, self.signs, smp.alias_prob, smp.alias_idx, smp.one_sided_tail,
                    smp.fp, smp.ip, self.lam, pr, float(t_stop), float(tick), vs, ds, me)
            else:
                status = _advance_skip(
                    self.stream.key, self.ist, self.fst, self.coords, self.times, self.parent, self.table,
                    self.fmax, self.fmin, self.ufp, self.lo, self.hi, self.ml, self.mr, self.sl, self.sr,
                    self.ht, self.hs, smp.alias_prob, smp.alias_idx, smp.one_sided_tail, smp.fp, smp.ip,
                    self.skip_fp, pr, float(t_stop), float(tick), vs, ds, me)
            self.stream.sync(self.ist[I_CTR])
            if status == NEED_ROOM:
                self._grow()
                continue
            return status


def init(kernel: Kernel, stream: Stream | None = None, engine: str = "plain") -> GrowthState:
    return GrowthState(kernel, stream, engine)


def step(state: GrowthState):
    """Process exactly one event (Occupied or Thinned)."""
    n0 = state.n
    state.advance(max_events=1)
    if state.n > n0:
        return Occupied(tuple(int(c) for c in state.coords[n0]), float(state.times[n0]))
    return Thinned(state.clock)


CLOCKS = ("native", "agent")


def clock_scale(state: GrowthState, clock: str) -> float:
    """Factor turning native time into ``clock`` units.

    ``native`` is the time of the weights W_e = E_e / r(|e|_1).  ``agent``
    rescales so that every occupied site fires at rate 1, i.e. t_agent =
    lambda * t_native.
    """
    if clock not in CLOCKS:
        raise ValueError(f"clock must be one of {CLOCKS}, got {clock!r}")
    return state.lam if clock == "agent" else 1.0


def _row(state: GrowthState, t: float) -> tuple:
    return (float(t), state.n, state.diameter, state.max_jump, state.thinned_count)


def run(state: GrowthState, stop: StopRule, cadence: Cadence | None = None, clock: str = "native") -> GrowthRun:
    """Drive the process until ``stop`` triggers, recording cadence rows.

    ``stop.max_time``, the cadence and the recorded times are all expressed
    in ``clock`` units.
    """
    cadence = cadence or Cadence()
    scale = clock_scale(state, clock)
    out = GrowthRun()
    t_stop = stop.max_time / scale if stop.max_time is not None else math.inf
    j = 0
    while cadence.tick(j) <= state.clock * scale:
        j += 1
    out.rows.append(_row(state, state.clock * scale))
    if stop.max_volume is not None and state.n >= stop.max_volume:
        out.stopped_by = "max_volume"
        out.truncated = state.n > stop.max_volume
        return _finish(state, out)
    while True:
        tick = cadence.tick(j)
        status = state.advance(t_stop=t_stop, tick=tick / scale, vol_stop=stop.max_volume,
                               diam_stop=stop.max_diameter)
        if status == TICK:
            out.rows.append(_row(state, tick))
            j += 1
            continue
        out.stopped_by = STATUS_NAMES[status]
        if out.rows[-1][0] != state.clock * scale:
            out.rows.append(_row(state, state.clock * scale))
        return _finish(state, out)


def _finish(state: GrowthState, out: GrowthRun) -> GrowthRun:
    out.events = state.event_count
    out.ties = state.tie_count
    return out


def occupation_times(state: GrowthState) -> dict:
    return {tuple(int(c) for c in state.coords[i]): float(state.times[i]) for i in range(state.n)}


def first_passage_samples(kernel: Kernel, probes, replicas: int, seed: int, engine: str = "plain",
                          tag: str = "growth", first_replica: int = 0) -> np.ndarray:
    """Occupation times of each probe site, one row per replica.

    Each replica runs until every probe is occupied, so the returned times are
    distributed as (T(0, p))_p on the infinite lattice.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=np.int64))
    out = np.empty((replicas, len(probes)))
    for r in range(replicas):
        st = GrowthState(kernel, Stream(seed, tag, first_replica + r), engine)
        st.advance(probes=probes)
        for q, p in enumerate(probes):
            out[r, q] = st.occupation_time(p)
    return out


def hit_indicators(kernel: Kernel, probes, t: float, replicas: int, seed: int, engine: str = "plain",
                   tag: str = "hits", first_replica: int = 0) -> np.ndarray:
    """Whether each probe is occupied by time t, one row per replica.

    Column means estimate P(T(0, p) <= t); each replica stops at t.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=np.int64))
    out = np.zeros((replicas, len(probes)), dtype=bool)
    for r in range(replicas):
        st = GrowthState(kernel, Stream(seed, tag, first_replica + r), engine)
        st.advance(t_stop=t, probes=probes)
        for q, p in enumerate(probes):
            ot = st.occupation_time(p)
            out[r, q] = ot is not None and ot <= t
    return out


# --------------------------------------------------------------------------
# numba kernels: hashing


@njit(cache=True)
def _hash(c):
    h = np.uint64(0x9E3779B97F4A7C15)
    for j in range(c.shape[0]):
        h = mix64(h ^ np.uint64(c[j]))
    return h


@njit(cache=True)
def _find(table, coords, c):
    mask = np.uint64(table.shape[0] - 1)
    slot = _hash(c) & mask
    d = c.shape[0]
    while True:
        i = table[slot]
        if i < 0:
            return -1
        same = True
        for j in range(d):
            if coords[i, j] != c[j]:
                same = False
                break
        if same:
            return i
        slot = (slot + np.uint64(1)) & mask


@njit(cache=True)
def _insert_site(table, coords, c, i):
    mask = np.uint64(table.shape[0] - 1)
    slot = _hash(c) & mask
    while table[slot] >= 0:
        slot = (slot + np.uint64(1)) & mask
    table[slot] = i
    for j in range(c.shape[0]):
        coords[i, j] = c[j]


@njit(cache=True)
def _rehash(table, coords, n):
    for i in range(n):
        _insert_site(table, coords, coords[i].copy(), i)


@njit(cache=True)
def _first_time(key, ist, lam):
    ctr = ist[I_CTR]
    t = exponential(key, ctr) / lam
    ist[I_CTR] = ctr + 1
    return t


@njit(cache=True)
def _record_insert(ist, fst, coords, times, parent, table, fmax, fmin, signs, target, src, t, jump, probes):
    """Insert ``target`` as site n; returns True when the last probe got hit."""
    n = ist[I_N]
    _insert_site(table, coords, target, n)
    if n > 0 and t == times[n - 1]:
        ist[I_TIES] += 1
    times[n] = t
    parent[n] = src
    if jump > ist[I_MAXJUMP]:
        ist[I_MAXJUMP] = jump
    for f in range(signs.shape[0]):
        v = 0
        for j in range(target.shape[0]):
            v += signs[f, j] * target[j]
        if v > fmax[f]:
            fmax[f] = v
        if v < fmin[f]:
            fmin[f] = v
    ist[I_N] = n + 1
    hit = False
    if probes.shape[0] > 0:
        for q in range(probes.shape[0]):
            same = True
            for j in range(target.shape[0]):
                if probes[q, j] != target[j]:
                    same = False
                    break
            if same:
                ist[I_PROBES_HIT] += 1
        hit = True
        for q in range(probes.shape[0]):
            if _find(table, coords, probes[q]) < 0:
                hit = False
                break
    return hit


@njit(cache=True)
def _diam(fmax, fmin):
    m = 0
    for f in range(fmax.shape[0]):
        if fmax[f] - fmin[f] > m:
            m = fmax[f] - fmin[f]
    return m


@njit(cache=True)
def _probes_done(table, coords, probes):
    if probes.shape[0] == 0:
        return False
    for q in range(probes.shape[0]):
        if _find(table, coords, probes[q]) < 0:
            return False
    return True


# --------------------------------------------------------------------------
# plain engine


@njit(cache=True)
def _advance_plain(key, ist, fst, coords, times, parent, table, fmax, fmin, signs,
                   alias_prob, alias_idx, T, fp, ip, lam, probes, t_stop, tick, vol_stop, diam_stop, max_events):
    d = coords.shape[1]
    buf = np.zeros(d, dtype=np.int64)
    target = np.zeros(d, dtype=np.int64)
    ctr = ist[I_CTR]
    if _probes_done(table, coords, probes):
        return PROBES
    while True:
        n = ist[I_N]
        if n >= coords.shape[0] or 2 * n >= table.shape[0] // 2:
            ist[I_CTR] = ctr
            return NEED_ROOM
        if ist[I_EVENTS] >= max_events:
            ist[I_CTR] = ctr
            return MAX_EVENTS
        t = fst[F_NEXT]
        if t > t_stop:
            fst[F_CLOCK] = t_stop
            ist[I_CTR] = ctr
            return MAX_TIME
        if t > tick:
            fst[F_CLOCK] = tick
            ist[I_CTR] = ctr
            return TICK
        fst[F_CLOCK] = t
        ist[I_EVENTS] += 1
        src = np.int64(uniform(key, ctr) * n)
        ctr += 1
        if src >= n:
            src = n - 1
        ctr = sample_point(key, ctr, alias_prob, alias_idx, T, fp, ip, buf)
        jump = 0
        for j in range(d):
            target[j] = coords[src, j] + buf[j]
            jump += abs(buf[j])
        inserted = False
        hit = False
        if _find(table, coords, target) >= 0:
            ist[I_THINNED] += 1
        else:
            hit = _record_insert(ist, fst, coords, times, parent, table, fmax, fmin, signs,
                                 target, src, t, jump, probes)
            inserted = True
        fst[F_NEXT] = t + exponential(key, ctr) / (ist[I_N] * lam)
        ctr += 1
        if inserted:
            if ist[I_N] >= vol_stop:
                ist[I_CTR] = ctr
                return MAX_VOLUME
            if _diam(fmax, fmin) >= diam_stop:
                ist[I_CTR] = ctr
                return MAX_DIAMETER
            if hit:
                ist[I_CTR] = ctr
                return PROBES


# --------------------------------------------------------------------------
# skip-ahead engine (d = 1)


@njit(cache=True)
def _uf_find(ufp, i):
    r = i
    while ufp[r] != r:
        r = ufp[r]
    while ufp[i] != r:
        nxt = ufp[i]
        ufp[i] = r
        i = nxt
    return r


@njit(cache=True)
def _uf_union(ufp, lo, hi, a, b):
    ra = _uf_find(ufp, a)
    rb = _uf_find(ufp, b)
    if ra == rb:
        return
    # attach the shorter run under the longer one
    if hi[ra] - lo[ra] < hi[rb] - lo[rb]:
        ra, rb = rb, ra
    ufp[rb] = ra
    if lo[rb] < lo[ra]:
        lo[ra] = lo[rb]
    if hi[rb] > hi[ra]:
        hi[ra] = hi[rb]


@njit(cache=True)
def _side_mass(m, T, fp, ip, skip_fp):
    """Proposal rate for targets at one-sided distance >= m."""
    K = ip[1]
    if m <= K:
        return T[m]
    return skip_fp[0] * _envelope_mass(float(m), fp[0], fp[3])


@njit(cache=True)
def _heap_up(ht, hs, pos):
    t = ht[pos]
    s = hs[pos]
    while pos > 0:
        par = (pos - 1) >> 1
        if ht[par] <= t:
            break
        ht[pos] = ht[par]
        hs[pos] = hs[par]
        pos = par
    ht[pos] = t
    hs[pos] = s


@njit(cache=True)
def _heap_down(ht, hs, size, pos):
    t = ht[pos]
    s = hs[pos]
    while True:
        c = 2 * pos + 1
        if c >= size:
            break
        if c + 1 < size and ht[c + 1] < ht[c]:
            c += 1
        if ht[c] >= t:
            break
        ht[pos] = ht[c]
        hs[pos] = hs[c]
        pos = c
    ht[pos] = t
    hs[pos] = s


@njit(cache=True)
def _skip_rate(i, coords, ufp, lo, hi, ml, mr, sl, sr, T, fp, ip, skip_fp):
    r = _uf_find(ufp, i)
    x = coords[i, 0]
    ml[i] = x - lo[r] + 1
    mr[i] = hi[r] - x + 1
    sl[i] = _side_mass(ml[i], T, fp, ip, skip_fp)
    sr[i] = _side_mass(mr[i], T, fp, ip, skip_fp)
    return sl[i] + sr[i]


@njit(cache=True)
def _skip_schedule(key, ist, fst, i, now, coords, ufp, lo, hi, ml, mr, sl, sr, ht, hs, T, fp, ip, skip_fp):
    """Push source i onto the heap with a fresh firing time."""
    rate = _skip_rate(i, coords, ufp, lo, hi, ml, mr, sl, sr, T, fp, ip, skip_fp)
    ctr = ist[I_CTR]
    size = ist[I_HEAP]
    ht[size] = now + exponential(key, ctr) / rate
    hs[size] = i
    ist[I_CTR] = ctr + 1
    ist[I_HEAP] = size + 1
    _heap_up(ht, hs, size)


@njit(cache=True)
def _draw_from_table(key, ctr, m, T, fp, ip, M1):
    """One-sided distance k >= m (m <= K) with P(k) proportional to r(k)."""
    K = ip[1]
    w = uniform(key, ctr) * T[m]
    ctr += 1
    if w < T[K + 1]:
        while True:
            k, ok, ctr = tail_attempt(key, ctr, fp[7], M1, fp, ip, True)
            if ok:
                return k, ctr
    # largest k in [m, K] with T[k] > w
    a = m
    b = K
    while a < b:
        mid = (a + b + 1) >> 1
        if T[mid] > w:
            a = mid
        else:
            b = mid - 1
    return np.int64(a), ctr


@njit(cache=True)
def _advance_skip(key, ist, fst, coords, times, parent, table, fmax, fmin, ufp, lo, hi, ml, mr, sl, sr, ht, hs,
                  alias_prob, alias_idx, T, fp, ip, skip_fp, probes, t_stop, tick, vol_stop, diam_stop, max_events):
    target = np.zeros(1, dtype=np.int64)
    signs = np.ones((1, 1), dtype=np.int64)
    if _probes_done(table, coords, probes):
        return PROBES
    while True:
        n = ist[I_N]
        if n >= coords.shape[0] or 2 * n >= table.shape[0] // 2:
            return NEED_ROOM
        if ist[I_EVENTS] >= max_events:
            return MAX_EVENTS
        t = ht[0]
        i = hs[0]
        if t > t_stop:
            fst[F_CLOCK] = t_stop
            return MAX_TIME
        if t > tick:
            fst[F_CLOCK] = tick
            return TICK
        fst[F_CLOCK] = t
        ist[I_EVENTS] += 1
        ctr = ist[I_CTR]
        left = uniform(key, ctr) * (sl[i] + sr[i]) < sl[i]
        ctr += 1
        m = ml[i] if left else mr[i]
        ok = True
        if m <= ip[1]:
            dist, ctr = _draw_from_table(key, ctr, m, T, fp, ip, skip_fp[0])
        else:
            dist, ok, ctr = tail_attempt(key, ctr, float(m), skip_fp[0], fp, ip, True)
        ist[I_CTR] = ctr
        inserted = False
        hit = False
        if ok:
            x = coords[i, 0]
            target[0] = x - dist if left else x + dist
            if _find(table, coords, target) >= 0:
                ist[I_THINNED] += 1
            else:
                j = n
                hit = _record_insert(ist, fst, coords, times, parent, table, fmax, fmin, signs,
                                     target, i, t, dist, probes)
                ufp[j] = j
                lo[j] = target[0]
                hi[j] = target[0]
                target[0] -= 1
                nb = _find(table, coords, target)
                if nb >= 0:
                    _uf_union(ufp, lo, hi, j, nb)
                target[0] += 2
                nb = _find(table, coords, target)
                if nb >= 0:
                    _uf_union(ufp, lo, hi, j, nb)
                inserted = True
        else:
            ist[I_THINNED] += 1
        # reschedule the source in place of the heap top
        rate = _skip_rate(i, coords, ufp, lo, hi, ml, mr, sl, sr, T, fp, ip, skip_fp)
        ctr = ist[I_CTR]
        ht[0] = t + exponential(key, ctr) / rate
        ist[I_CTR] = ctr + 1
        _heap_down(ht, hs, ist[I_HEAP], 0)
        if inserted:
            _skip_schedule(key, ist, fst, n, t, coords, ufp, lo, hi, ml, mr, sl, sr, ht, hs, T, fp, ip, skip_fp)
            if ist[I_N] >= vol_stop:
                return MAX_VOLUME
            if _diam(fmax, fmin) >= diam_stop:
                return MAX_DIAMETER
            if hit:
                return PROBES

"""First-passage oracle on a finite box of Z^d.

Edge weights are never stored: the weight of the unordered edge {i, j}
(box indices, i < j) is ``E^gamma / r(|x_i - x_j|_1)`` with ``E`` the unit
exponential drawn at counter ``i * N + j`` of the oracle's stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bounds import scheme_levels
from .errors import AnsatzInfeasible
from .kernel import Kernel, rate
from .rng import derive_key, exponential

DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class BoxSpec:
    """Sites {-R..R}^d with free boundary, indexed in mixed radix (last axis fastest)."""

    d: int
    radius: int
    budget: float = DEFAULT_BUDGET

    def __post_init__(self):
        if self.d < 1 or self.radius < 0:
            raise ValueError("need d >= 1 and radius >= 0")
        if self.size > self.budget:
            raise ValueError(f"box has {self.size} sites, over the budget of {self.budget:g}")

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def size(self) -> int:
        return self.side**self.d

    def contains(self, site) -> bool:
        return bool(np.all(np.abs(np.asarray(site)) <= self.radius))

    def index(self, site) -> int:
        s = np.asarray(site, dtype=np.int64).reshape(self.d)
        if not self.contains(s):
            raise ValueError(f"site {tuple(s)} outside box of radius {self.radius}")
        i = 0
        for c in s:
            i = i * self.side + int(c) + self.radius
        return i

    def site(self, index: int) -> tuple:
        if not 0 <= index < self.size:
            raise ValueError("index out of range")
        out = []
        for _ in range(self.d):
            index, c = divmod(index, self.side)
            out.append(c - self.radius)
        return tuple(reversed(out))

    def sites(self) -> np.ndarray:
        axes = [np.arange(-self.radius, self.radius + 1)] * self.d
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class WeightOracle:
    """Lazily realized edge weights for one configuration (``seed``, ``index``)."""

    box: BoxSpec
    kernel: Kernel
    seed: int
    index: int = 0
    key: np.uint64 = field(init=False, repr=False)
    coords: np.ndarray = field(init=False, repr=False)
    rates: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kernel.d != self.box.d:
            raise ValueError("kernel and box dimensions differ")
        object.__setattr__(self, "key", np.uint64(derive_key(self.seed, "oracle", self.index)))
        object.__setattr__(self, "coords", self.box.sites())
        dmax = 2 * self.box.radius * self.box.d
        table = np.zeros(dmax + 1)
        if dmax:
            table[1:] = rate(self.kernel, np.arange(1, dmax + 1))
        object.__setattr__(self, "rates", table)

    def replica(self, index: int) -> "WeightOracle":
        return WeightOracle(self.box, self.kernel, self.seed, index)

    def weight(self, x, y) -> float:
        i, j = self.box.index(x), self.box.index(y)
        if i == j:
            raise ValueError("an edge needs two distinct endpoints")
        return float(_weight(self.key, i, j, self.coords, self.rates, self.kernel.gamma))

    def weight_by_index(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("an edge needs two distinct endpoints")
        return float(_weight(self.key, i, j, self.coords, self.rates, self.kernel.gamma))


@njit(cache=True, inline="always")
def _weight(key, i, j, coords, rates, gamma):
    n = coords.shape[0]
    if i > j:
        i, j = j, i
    dist = 0
    for c in range(coords.shape[1]):
        dist += abs(coords[i, c] - coords[j, c])
    e = exponential(key, np.int64(i) * n + j)
    if gamma != 1.0:
        e = e**gamma
    return e / rates[dist]


@njit(cache=True)
def _dijkstra(key, coords, rates, gamma, src, target):
    n = coords.shape[0]
    dist = np.full(n, np.inf)
    done = np.zeros(n, dtype=np.bool_)
    dist[src] = 0.0
    for _ in range(n):
        u = -1
        best = np.inf
        for v in range(n):
            if not done[v] and dist[v] < best:
                best = dist[v]
                u = v
        if u < 0:
            break
        done[u] = True
        if u == target:
            break
        for v in range(n):
            if not done[v]:
                alt = best + _weight(key, u, v, coords, rates, gamma)
                if alt < dist[v]:
                    dist[v] = alt
    return dist


def dijkstra_times(oracle: WeightOracle, source=None, target=None) -> np.ndarray:
    """Passage times from ``source`` (default origin) to every box site.

    The result is indexed by ``oracle.box.index``.  With ``target`` the search
    stops once the target is settled; entries of unsettled sites are then only
    upper bounds.
    """
    box = oracle.box
    src = box.index(source if source is not None else (0,) * box.d)
    tgt = -1 if target is None else box.index(target)
    return _dijkstra(oracle.key, oracle.coords, oracle.rates, float(oracle.kernel.gamma), src, tgt)


def passage_time(oracle: WeightOracle, x, y=None) -> float:
    """T(y, x) inside the box (y defaults to the origin)."""
    box = oracle.box
    src = (0,) * box.d if y is None else y
    return float(dijkstra_times(oracle, src, x)[box.index(x)])


def oracle_passage_samples(kernel: Kernel, radius: int, probes, replicas: int, seed: int,
                           first_replica: int = 0, budget: float = DEFAULT_BUDGET) -> np.ndarray:
    """T(0, x) for each probe over independent box realizations, shape (replicas, probes)."""
    box = BoxSpec(kernel.d, radius, budget)
    idx = np.array([box.index(p) for p in probes], dtype=np.int64)
    base = WeightOracle(box, kernel, seed)
    src = box.index((0,) * kernel.d)
    tgt = int(idx[0]) if len(idx) == 1 else -1  # early stop is exact only for a single probe
    out = np.empty((replicas, len(idx)))
    for r in range(replicas):
        o = base.replica(first_replica + r)
        dist = _dijkstra(o.key, o.coords, o.rates, float(kernel.gamma), src, tgt)
        out[r] = dist[idx]
    return out


# --------------------------------------------------------------------------
# multi-scale path


@njit(cache=True)
def _argmin_edge(key, coords, rates, gamma, left, right):
    best = np.inf
    bu = -1
    bv = -1
    for a in range(left.size):
        u = left[a]
        for b in range(right.size):
            v = right[b]
            if u == v:
                continue
            w = _weight(key, u, v, coords, rates, gamma)
            if w < best:
                best = w
                bu = u
                bv = v
    return bu, bv, best


class _PathBuilder:
    def __init__(self, oracle: WeightOracle, levels: np.ndarray):
        self.o = oracle
        self.box = oracle.box
        self.f = levels
        self.k = len(levels) - 1
        self.sites = [np.zeros(self.box.d, dtype=np.int64)]
        self.W = 0.0

    def ball(self, centre: np.ndarray, radius: float) -> np.ndarray:
        r = int(math.floor(radius + 1e-9))
        R = self.box.radius
        if np.any(np.abs(centre) + r > R):
            raise AnsatzInfeasible(f"ball of radius {r} around {tuple(centre)} leaves the box of radius {R}")
        axes = [np.arange(c - r, c + r + 1) for c in centre]
        grid = np.meshgrid(*axes, indexing="ij")
        side = self.box.side
        idx = np.zeros(grid[0].size, dtype=np.int64)
        for g in grid:
            idx = idx * side + (g.ravel() + R)
        return idx

    def step(self, v_idx: int):
        u_idx = self.box.index(self.sites[-1])
        self.W += self.o.weight_by_index(u_idx, v_idx)
        self.sites.append(self.o.coords[v_idx].copy())

    def staircase(self, target: np.ndarray):
        cur = self.sites[-1].copy()
        for c in range(self.box.d):
            s = 1 if target[c] > cur[c] else -1
            while cur[c] != target[c]:
                cur[c] += s
                self.step(self.box.index(cur))

    def join(self, a: np.ndarray, b: np.ndarray, level: int):
        """Extend the path (currently ending at a) to b using scales f_level.."""
        if np.array_equal(a, b):
            return
        if level > self.k:
            self.staircase(b)
            return
        o = self.o
        left = self.ball(a, self.f[level])
        right = self.ball(b, self.f[level])
        u, v, _ = _argmin_edge(o.key, o.coords, o.rates, float(o.kernel.gamma), left, right)
        self.join(a, o.coords[u], level + 1)
        self.step(v)
        self.join(o.coords[v], b, level + 1)


def multiscale_path(oracle: WeightOracle, x, scheme, k: int) -> tuple[list, float]:
    """Recursive ball-to-ball path from the origin to ``x`` and its passage time.

    Scales are f_0 = |x|_inf, f_i = f(f_{i-1}); level-i balls are l_inf balls
    of radius f_i.  Below level k the path uses coordinate-by-coordinate
    nearest-neighbour steps.
    """
    x = np.asarray(x, dtype=np.int64).reshape(oracle.box.d)
    if not oracle.box.contains(x):
        raise AnsatzInfeasible("target outside the box")
    n = int(np.abs(x).max())
    if n == 0:
        raise ValueError("x must differ from the origin")
    levels = scheme_levels(scheme, n, k)
    b = _PathBuilder(oracle, levels)
    b.join(b.sites[0].copy(), x, 1)
    return [tuple(int(c) for c in s) for s in b.sites], float(b.W)

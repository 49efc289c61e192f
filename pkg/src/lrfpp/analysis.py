"""Estimators: diameters, growth-exponent fits, speeds, shapes and KS tests."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.spatial import ConvexHull, QhullError

from .errors import FitError

MIN_POINTS = 5
KS_MIN_N = 100


@dataclass(frozen=True)
class ExponentEstimate:
    kind: str  # StretchedInvDelta | SuperlinearInvGamma | LogCorrected | LinearSpeed | ExponentialVolumeRate
    value: float
    stderr: float
    fit_window: tuple
    n_points: int
    meta: dict = field(default_factory=dict, compare=False)


def _as_sites(sites) -> np.ndarray:
    a = np.asarray(list(sites) if isinstance(sites, (set, frozenset, dict)) else sites, dtype=np.int64)
    if a.ndim == 1:
        a = a.reshape(-1, 1) if a.size else a.reshape(0, 1)
    return a


def functionals(d: int) -> np.ndarray:
    """Sign vectors s with s_0 = +1; l1 distance = max_s |s.(x - y)|."""
    return np.array([(1,) + s for s in itertools.product((1, -1), repeat=d - 1)], dtype=np.int64)


def diameter(sites) -> int:
    """Exact max pairwise l1 distance in O(2^(d-1) N)."""
    a = _as_sites(sites)
    if len(a) == 0:
        raise ValueError("diameter of an empty set")
    proj = a @ functionals(a.shape[1]).T
    return int(np.max(proj.max(axis=0) - proj.min(axis=0)))


def diameter_bruteforce(sites) -> int:
    a = _as_sites(sites)
    if len(a) == 0:
        raise ValueError("diameter of an empty set")
    return int(np.max(np.abs(a[:, None, :] - a[None, :, :]).sum(axis=2)))


# --------------------------------------------------------------------------
# series handling


def _series(series) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(series, dtype=float)
    if a.ndim != 2 or a.shape[1] < 2:
        raise FitError("series must be a sequence of (t, value) pairs")
    return a[:, 0], a[:, 1]


def pooled_median(records, column: int = 2) -> np.ndarray:
    """Median across replicas at the time points shared by every replica.

    ``records`` are row arrays (t, volume, diameter, max_jump, thinned); the
    result is an array of (t, median of ``column``).
    """
    arrays = [np.asarray(r, dtype=float) for r in records]
    common = set(arrays[0][:, 0].tolist())
    for a in arrays[1:]:
        common &= set(a[:, 0].tolist())
    ts = np.array(sorted(common))
    vals = []
    for a in arrays:
        lookup = dict(zip(a[:, 0].tolist(), a[:, column].tolist()))
        vals.append([lookup[t] for t in ts])
    return np.column_stack([ts, np.median(np.array(vals), axis=0)])


def window(t: np.ndarray, frac: float = 0.5, t_min: float | None = None) -> np.ndarray:
    """Mask of the top ``frac`` of the log-t range (t > 0)."""
    pos = t > 0 if t_min is None else t >= t_min
    if pos.sum() < 2:
        return pos
    lt = np.log(t[pos])
    lo = lt.max() - frac * (lt.max() - lt.min())
    mask = np.zeros_like(pos)
    mask[pos] = lt >= lo - 1e-12
    return mask


def _linfit(x, y, kind, t_used, meta=None) -> ExponentEstimate:
    if len(x) < MIN_POINTS:
        raise FitError(f"{kind}: need at least {MIN_POINTS} points in the fit window, got {len(x)}")
    if np.ptp(x) == 0:
        raise FitError(f"{kind}: degenerate abscissa")
    res = stats.linregress(x, y)
    meta = dict(meta or {})
    meta["intercept"] = float(res.intercept)
    meta["degenerate"] = bool(np.ptp(y) == 0)
    stderr = float(res.stderr) if np.isfinite(res.stderr) else 0.0
    return ExponentEstimate(kind, float(res.slope), stderr, (float(t_used.min()), float(t_used.max())),
                            int(len(x)), meta)


def fit_stretched(series, frac: float = 0.5) -> ExponentEstimate:
    """Slope of log log D_t against log t (estimates 1/Delta)."""
    t, D = _series(series)
    ok = (t > 0) & (D >= 3)
    t, D = t[ok], D[ok]
    m = window(t, frac)
    return _linfit(np.log(t[m]), np.log(np.log(D[m])), "StretchedInvDelta", t[m])


def fit_superlinear(series, frac: float = 0.5) -> ExponentEstimate:
    """Slope of log D_t against log t (estimates 1/Gamma)."""
    t, D = _series(series)
    ok = (t > 0) & (D >= 1)
    t, D = t[ok], D[ok]
    m = window(t, frac)
    return _linfit(np.log(t[m]), np.log(D[m]), "SuperlinearInvGamma", t[m])


def fit_log_corrected(series, frac: float = 0.5) -> ExponentEstimate:
    """Slope of log D_t against (log t)^2, with a power-law model comparison.

    ``meta['preferred']`` is ``"power_law"`` when log D is better explained
    as linear in log t than linear in (log t)^2.
    """
    t, D = _series(series)
    ok = (t > 1) & (D >= 1)
    t, D = t[ok], D[ok]
    m = window(t, frac)
    lt, y = np.log(t[m]), np.log(D[m])
    est = _linfit(lt**2, y, "LogCorrected", t[m])
    sse_sq = _sse(lt**2, y)
    sse_pow = _sse(lt, y)
    meta = dict(est.meta, sse_log_squared=sse_sq, sse_power_law=sse_pow,
                preferred="power_law" if sse_pow < sse_sq else "log_corrected")
    return ExponentEstimate(est.kind, est.value, est.stderr, est.fit_window, est.n_points, meta)


def _sse(x, y) -> float:
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(np.sum((y - A @ coef) ** 2))


def log_squared_ratio(series, decades: float = 1.0) -> np.ndarray:
    """log D_t / (log t)^2 over the final ``decades`` of t."""
    t, D = _series(series)
    ok = (t > 1) & (D >= 1)
    t, D = t[ok], D[ok]
    keep = t >= t.max() / 10**decades
    return np.log(D[keep]) / np.log(t[keep]) ** 2


def fit_exponential_rate(series, frac: float = 0.5) -> ExponentEstimate:
    """Slope of log |B_t| against t."""
    t, V = _series(series)
    ok = (t > 0) & (V >= 1)
    t, V = t[ok], V[ok]
    m = window(t, frac)
    return _linfit(t[m], np.log(V[m]), "ExponentialVolumeRate", t[m])


def fit_linear_speed(samples, n_boot: int = 2000, seed: int = 0) -> ExponentEstimate:
    """Mean of T/n at the largest n (estimates nu(x)).

    ``samples`` maps n to an array of passage times T(0, n x) (or is a list of
    (n, T) pairs).  ``meta['diagnostic']`` is |mean(T/n) at n_max - at n_max/2|.
    """
    if isinstance(samples, dict):
        groups = {int(n): np.asarray(v, dtype=float).ravel() for n, v in samples.items()}
    else:
        groups = {}
        for n, T in samples:
            groups.setdefault(int(n), []).append(float(T))
        groups = {n: np.asarray(v) for n, v in groups.items()}
    ns = sorted(groups)
    if len(ns) < 2 or ns[-1] < 4 * ns[0]:
        raise FitError("linear speed needs n values spanning at least two doublings")
    n_max = ns[-1]
    half = n_max // 2
    if half not in groups:
        raise FitError("linear speed needs samples at n_max / 2 for the convergence diagnostic")
    top = groups[n_max] / n_max
    if len(top) < 2:
        raise FitError("linear speed needs at least two samples at n_max")
    rng = np.random.default_rng(seed)
    boots = rng.choice(top, size=(n_boot, len(top)), replace=True).mean(axis=1)
    nu = float(top.mean())
    diag = abs(nu - float(np.mean(groups[half] / half)))
    means = {n: float(np.mean(groups[n] / n)) for n in ns}
    return ExponentEstimate("LinearSpeed", nu, float(boots.std(ddof=1)), (float(ns[0]), float(n_max)),
                            len(ns), {"diagnostic": diag, "means": means})


# --------------------------------------------------------------------------
# shape, jumps, components


def empirical_shape(coords, times, t: float) -> dict:
    """Points x / t over sites occupied by time t (hull vertices for d = 2)."""
    coords = _as_sites(coords)
    times = np.asarray(times, dtype=float)
    if t <= 0:
        raise ValueError("empirical_shape needs t > 0")
    pts = coords[times <= t] / t
    out = {"t": float(t), "points": pts, "hull": None}
    if coords.shape[1] == 2:
        out["hull"] = hull_vertices(pts)
    return out


def hull_vertices(pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 3:
        return pts.copy()
    try:
        h = ConvexHull(pts)
    except QhullError:
        return pts.copy()  # collinear cloud
    return pts[h.vertices]


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    from scipy.spatial.distance import directed_hausdorff

    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))


def max_jump(coords, parents) -> int:
    """max over non-root sites of |site - parent|_1 (0 for a single site)."""
    coords = _as_sites(coords)
    parents = np.asarray(parents, dtype=np.int64)
    child = parents >= 0
    if not child.any():
        return 0
    return int(np.max(np.abs(coords[child] - coords[parents[child]]).sum(axis=1)))


def component_sizes(coords) -> np.ndarray:
    """Sizes of the 4-connected clusters of a d = 2 site set, largest first."""
    from scipy import ndimage

    c = _as_sites(coords)
    if c.shape[1] != 2:
        raise ValueError("component counting is implemented for d = 2")
    lo = c.min(axis=0)
    span = c.max(axis=0) - lo + 1
    img = np.zeros(tuple(span), dtype=bool)
    img[c[:, 0] - lo[0], c[:, 1] - lo[1]] = True
    labels, n = ndimage.label(img)
    sizes = np.bincount(labels.ravel())[1:]
    return np.sort(sizes)[::-1]


def count_components(coords) -> int:
    """Number of 4-connected clusters of a d = 2 site set."""
    return int(len(component_sizes(coords)))


# --------------------------------------------------------------------------
# distribution tests


def ks_two_sample(a, b, min_n: int = KS_MIN_N) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample needs nonempty samples")
    if min(a.size, b.size) < min_n:
        raise ValueError(f"ks_two_sample uses asymptotic p-values; need n >= {min_n}")
    if a.size == b.size and np.array_equal(np.sort(a), np.sort(b)):
        return 0.0, 1.0
    res = stats.ks_2samp(a, b, method="asymp")
    return float(res.statistic), float(res.pvalue)


def dkw_epsilon(n: int, confidence: float) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band."""
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * n))


def gamma_domination(samples, shape: int, confidence: float = 0.999) -> dict:
    """Check F_emp(t) >= F_Gamma(shape,1)(t) - eps at every sample point.

    A site at l1 distance ``shape`` is reached no later than the sum of
    ``shape`` unit exponentials along a nearest-neighbour path.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    eps = dkw_epsilon(n, confidence)
    emp = np.arange(1, n + 1) / n
    ref = stats.gamma.cdf(x, shape)
    gap = float(np.max(ref - emp))
    return {"eps": eps, "max_violation": gap, "ok": gap <= eps}

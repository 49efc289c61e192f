"""Run configuration and on-disk records.

Configs are INI files (``key = value`` sections, read with configparser) and
round-trip losslessly through :meth:`RunConfig.to_ini` and
:meth:`RunConfig.to_dict`.  Run directories hold ``manifest.json``, one
``replica_<i>.csv`` per replica, ``summary.json`` and ``timing.json``; every
file except ``timing.json`` is a pure function of the config.
"""
from __future__ import annotations

import configparser
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .growth import CLOCKS, Cadence, StopRule
from .kernel import Kernel, LogPower, Unit

CSV_HEADER = "t,volume,diameter,max_jump,thinned"
MODES = ("dispersal", "oracle", "bounds", "classify")
ENGINES = ("plain", "skip")
SUMMARY_SCHEMA = "summary.schema.json"


def parse_slowvary(text: str):
    text = str(text).strip().lower()
    if text in ("unit", "1", "none"):
        return Unit()
    if text.startswith("logpower:"):
        return LogPower(float(text.split(":", 1)[1]))
    raise ValueError(f"slowvary must be 'unit' or 'logpower:<p>', got {text!r}")


def format_slowvary(sv) -> str:
    return "unit" if isinstance(sv, Unit) else f"logpower:{sv.p!r}"


def parse_sites(text: str, d: int) -> tuple:
    """'4; 8; -16' or '1,2; 3,4' -> tuple of d-tuples."""
    out = []
    for chunk in str(text).split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        site = tuple(int(v) for v in chunk.split(","))
        if len(site) != d:
            raise ValueError(f"site {chunk!r} does not have {d} coordinates")
        out.append(site)
    if not out:
        raise ValueError("need at least one probe site")
    return tuple(out)


def format_sites(sites) -> str:
    return "; ".join(",".join(str(c) for c in s) for s in sites)


@dataclass(frozen=True)
class RunConfig:
    d: int = 2
    alpha: float = 3.5
    slowvary: str = "unit"
    gamma: float = 1.0
    mode: str = "dispersal"
    seed: int = 0
    replicas: int = 1
    max_time: float | None = None
    max_volume: int | None = None
    max_diameter: int | None = None
    cadence_t0: float = 0.01
    cadence_factor: float = 2 ** (1 / 8)
    engine: str = "plain"
    clock: str = "native"
    snapshot: bool = False
    out: str = "run"
    # oracle-check
    radius: int = 64
    probes: tuple = ()
    samples: int = 2000
    alpha_dispersal: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.clock not in CLOCKS:
            raise ValueError(f"clock must be one of {CLOCKS}")
        if self.replicas < 1 or self.samples < 1:
            raise ValueError("replicas and samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        parse_slowvary(self.slowvary)
        if self.mode == "dispersal":
            self.stop_rule()
        if self.mode == "oracle" and not self.probes:
            raise ValueError("oracle mode needs probe sites")

    # -- derived objects -------------------------------------------------

    def kernel(self, alpha: float | None = None) -> Kernel:
        return Kernel(self.d, self.alpha if alpha is None else alpha, parse_slowvary(self.slowvary), self.gamma)

    def stop_rule(self) -> StopRule:
        return StopRule(self.max_time, self.max_volume, self.max_diameter)

    def cadence(self) -> Cadence:
        return Cadence(self.cadence_t0, self.cadence_factor)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        out = asdict(self)
        out["probes"] = [list(p) for p in self.probes]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "probes" in data:
            data["probes"] = tuple(tuple(int(c) for c in p) for p in data["probes"])
        return cls(**data)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["kernel"] = {"d": str(self.d), "alpha": repr(self.alpha), "slowvary": self.slowvary,
                        "gamma": repr(self.gamma)}
        cp["run"] = {"mode": self.mode, "seed": str(self.seed), "replicas": str(self.replicas),
                     "engine": self.engine, "clock": self.clock, "snapshot": str(self.snapshot).lower(),
                     "out": self.out}
        stop = {}
        for k in ("max_time", "max_volume", "max_diameter"):
            v = getattr(self, k)
            if v is not None:
                stop[k] = repr(v)
        cp["stop"] = stop
        cp["cadence"] = {"t0": repr(self.cadence_t0), "factor": repr(self.cadence_factor)}
        orc = {"radius": str(self.radius), "samples": str(self.samples)}
        if self.probes:
            orc["probes"] = format_sites(self.probes)
        if self.alpha_dispersal is not None:
            orc["alpha_dispersal"] = repr(self.alpha_dispersal)
        cp["oracle"] = orc
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        allowed = {"kernel", "run", "stop", "cadence", "oracle"}
        extra = set(cp.sections()) - allowed
        if extra:
            raise ValueError(f"unknown config sections: {sorted(extra)}")
        kw: dict = {}
        get = lambda sec, key: cp.get(sec, key) if cp.has_option(sec, key) else None  # noqa: E731
        conv = {
            ("kernel", "d"): ("d", int), ("kernel", "alpha"): ("alpha", float),
            ("kernel", "slowvary"): ("slowvary", str), ("kernel", "gamma"): ("gamma", float),
            ("run", "mode"): ("mode", str), ("run", "seed"): ("seed", int),
            ("run", "replicas"): ("replicas", int), ("run", "engine"): ("engine", str),
            ("run", "clock"): ("clock", str), ("run", "out"): ("out", str),
            ("stop", "max_time"): ("max_time", float), ("stop", "max_volume"): ("max_volume", _intlike),
            ("stop", "max_diameter"): ("max_diameter", _intlike),
            ("cadence", "t0"): ("cadence_t0", float), ("cadence", "factor"): ("cadence_factor", float),
            ("oracle", "radius"): ("radius", int), ("oracle", "samples"): ("samples", int),
            ("oracle", "alpha_dispersal"): ("alpha_dispersal", float),
        }
        for sec in cp.sections():
            for key in cp[sec]:
                if (sec, key) in conv or (sec, key) in (("run", "snapshot"), ("oracle", "probes")):
                    continue
                raise ValueError(f"unknown key {key!r} in section [{sec}]")
        for (sec, key), (name, fn) in conv.items():
            v = get(sec, key)
            if v is not None:
                kw[name] = fn(v)
        if cp.has_option("run", "snapshot"):
            kw["snapshot"] = cp.getboolean("run", "snapshot")
        if cp.has_option("oracle", "probes"):
            kw["probes"] = parse_sites(cp.get("oracle", "probes"), kw.get("d", cls.d))
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        """Read an INI config, or the ``config`` entry of a manifest.json."""
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".json":
            data = json.loads(text)
            return cls.from_dict(data.get("config", data))
        return cls.from_ini(text)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _intlike(text: str) -> int:
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


# --------------------------------------------------------------------------
# records


@dataclass
class RunRecord:
    """One replica: config echo, rows, terminal state reference and counters."""

    config: RunConfig
    replica: int
    rows: np.ndarray
    stopped_by: str
    truncated: bool
    events: int
    ties: int
    snapshot: str | None = None
    wall_seconds: float = field(default=0.0, compare=False)

    def check(self) -> None:
        r = self.rows
        if np.any(np.diff(r[:, 0]) < 0):
            raise AssertionError("rows not sorted by t")
        if np.any(np.diff(r[:, 1]) < 0) or np.any(np.diff(r[:, 2]) < 0):
            raise AssertionError("volume and diameter must be non-decreasing")


def _fmt(v: float) -> str:
    if float(v).is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(float(v))


def write_csv(path, rows: np.ndarray) -> None:
    lines = [CSV_HEADER]
    for row in np.asarray(rows, dtype=float):
        lines.append(",".join([repr(float(row[0]))] + [_fmt(v) for v in row[1:]]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> np.ndarray:
    text = Path(path).read_text().splitlines()
    if not text or text[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header")
    if len(text) == 1:
        return np.zeros((0, 5))
    return np.loadtxt(text[1:], delimiter=",", ndmin=2)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_snapshot(path, coords: np.ndarray, times: np.ndarray) -> None:
    """Terminal occupied set as CSV (coordinates then occupation time)."""
    d = coords.shape[1]
    head = ",".join([f"x{i}" for i in range(d)] + ["time"])
    lines = [head] + [",".join([str(int(c)) for c in x] + [repr(float(t))]) for x, t in zip(coords, times)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> tuple[np.ndarray, np.ndarray]:
    a = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return a[:, :-1].astype(np.int64), a[:, -1]


def summarize(records: list[RunRecord]) -> dict:
    """Pooled medians across replicas (JSON-ready, deterministic)."""
    from .analysis import pooled_median

    arrays = [r.rows for r in records]
    final = np.array([a[-1] for a in arrays])
    vol = pooled_median(arrays, 1)
    diam = pooled_median(arrays, 2)
    med_vol = float(np.median(final[:, 1]))
    return {
        "schema": "lrfpp.summary/1",
        "replicas": len(records),
        "clock": records[0].config.clock,
        "final": {
            "time_median": float(np.median(final[:, 0])),
            "volume_median": med_vol,
            "log10_volume_median": float(np.median(np.log10(final[:, 1]))),
            "diameter_median": float(np.median(final[:, 2])),
            "max_jump_median": float(np.median(final[:, 3])),
        },
        "pooled": {"t": vol[:, 0].tolist(), "volume": vol[:, 1].tolist(), "diameter": diam[:, 1].tolist()},
        "per_replica": {
            "stopped_by": [r.stopped_by for r in records],
            "truncated": [bool(r.truncated) for r in records],
            "events": [int(r.events) for r in records],
            "ties": [int(r.ties) for r in records],
            "volume": [int(v) for v in final[:, 1]],
        },
    }


def summary_schema() -> dict:
    return json.loads(resources.files("lrfpp").joinpath(SUMMARY_SCHEMA).read_text())


def validate_summary(summary: dict) -> None:
    import jsonschema

    jsonschema.validate(summary, summary_schema())


"""Command line: simulate | oracle-check | bounds | classify | render.

Exit codes: 0 success, 1 internal error, 2 domain or config error,
3 failed check (oracle-check verdict).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as B
from .analysis import ks_two_sample
from .exactfpp import oracle_passage_samples
from .growth import GrowthState, clock_scale, first_passage_samples, run
from .records import (
    RunConfig,
    RunRecord,
    read_csv,
    read_snapshot,
    summarize,
    validate_summary,
    write_csv,
    write_json,
    write_snapshot,
)
from .render import image, snapshot_name, write_ppm
from .rng import Stream

EXIT_OK, EXIT_INTERNAL, EXIT_DOMAIN, EXIT_CHECK = 0, 1, 2, 3
KS_LEVEL = 0.01


# --------------------------------------------------------------------------
# workers (module level so they pickle)


def simulate_replica(cfg: RunConfig, i: int):
    t0 = time.perf_counter()
    st = GrowthState(cfg.kernel(), Stream(cfg.seed, "growth", i), cfg.engine)
    res = run(st, cfg.stop_rule(), cfg.cadence(), cfg.clock)
    snap = None
    if cfg.snapshot:
        snap = (st.sites(), st.occupation_array() * clock_scale(st, cfg.clock))
    rec = RunRecord(cfg, i, res.as_array(), res.stopped_by, res.truncated, res.events, res.ties,
                    wall_seconds=time.perf_counter() - t0)
    rec.check()
    return rec, snap


def _dispersal_chunk(args):
    kernel, probes, lo, hi, seed = args
    return first_passage_samples(kernel, probes, hi - lo, seed, first_replica=lo)


def _oracle_chunk(args):
    kernel, radius, probes, lo, hi, seed = args
    return oracle_passage_samples(kernel, radius, probes, hi - lo, seed, first_replica=lo)


def _pool_map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))  # results in submission order


def _chunks(n: int, jobs: int) -> list[tuple[int, int]]:
    k = max(1, min(jobs, n))
    edges = np.linspace(0, n, k + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


# --------------------------------------------------------------------------
# subcommands


def _load_config(args, mode: str) -> RunConfig:
    if not args.config:
        raise ValueError("--config is required")
    cfg = RunConfig.load(args.config).with_overrides(seed=args.seed, replicas=args.replicas, out=args.out)
    if cfg.mode != mode:
        raise ValueError(f"config mode is {cfg.mode!r}, expected {mode!r}")
    return cfg


def _manifest(cfg: RunConfig, command: str) -> dict:
    return {"tool": "lrfpp", "version": __version__, "command": command, "seed": cfg.seed, "config": cfg.to_dict()}


def cmd_simulate(args) -> int:
    cfg = _load_config(args, "dispersal")
    cfg.kernel().require_summable()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    write_json(out / "manifest.json", _manifest(cfg, "simulate"))
    results = _pool_map(_sim_one, [(cfg, i) for i in range(cfg.replicas)], args.jobs)
    records = []
    for rec, snap in results:
        write_csv(out / f"replica_{rec.replica}.csv", rec.rows)
        if snap is not None:
            write_snapshot(out / f"sites_{rec.replica}.csv", *snap)
        records.append(rec)
    summary = summarize(records)
    validate_summary(summary)
    write_json(out / "summary.json", summary)
    write_json(out / "timing.json", {"wall_seconds": time.perf_counter() - t0,
                                     "replica_seconds": [r.wall_seconds for r in records]})
    print(json.dumps(summary["final"], sort_keys=True))
    return EXIT_OK


def _sim_one(item):
    return simulate_replica(*item)


def oracle_check(cfg: RunConfig, jobs: int = 1) -> dict:
    """Dispersal occupation times vs box Dijkstra passage times, per probe."""
    probes = [tuple(p) for p in cfg.probes]
    k_orc = cfg.kernel()
    k_disp = cfg.kernel(cfg.alpha_dispersal)
    spans = _chunks(cfg.samples, jobs)
    disp = np.vstack(_pool_map(_dispersal_chunk, [(k_disp, probes, a, b, cfg.seed) for a, b in spans], jobs))
    orc = np.vstack(_pool_map(_oracle_chunk, [(k_orc, cfg.radius, probes, a, b, cfg.seed) for a, b in spans], jobs))
    m = len(probes)
    rows = []
    for q, p in enumerate(probes):
        stat, pval = ks_two_sample(disp[:, q], orc[:, q])
        adj = min(1.0, pval * m)
        rows.append({"probe": list(p), "ks": stat, "p": pval, "p_bonferroni": adj, "pass": adj > KS_LEVEL,
                     "mean_dispersal": float(disp[:, q].mean()), "mean_oracle": float(orc[:, q].mean())})
    return {"alpha_oracle": k_orc.alpha, "alpha_dispersal": k_disp.alpha, "radius": cfg.radius,
            "samples": cfg.samples, "level": KS_LEVEL, "probes": rows, "pass": all(r["pass"] for r in rows)}


def cmd_oracle_check(args) -> int:
    cfg = _load_config(args, "oracle")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    write_json(out / "manifest.json", _manifest(cfg, "oracle-check"))
    report = oracle_check(cfg, args.jobs)
    write_json(out / "report.json", report)
    write_json(out / "timing.json", {"wall_seconds": time.perf_counter() - t0})
    print(json.dumps({"pass": report["pass"], "p_bonferroni": [r["p_bonferroni"] for r in report["probes"]]}))
    return EXIT_OK if report["pass"] else EXIT_CHECK


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def bounds_ansatz(alpha: float, d: int, n: float) -> dict:
    r = B.ansatz_optimize(alpha, d, n)
    out = {"scheme": r.scheme_name, "k": r.k, "n": r.n, "Lambda": r.Lambda, "lambda": r.lambda_small,
           "tail_at_1": r.tail(1.0), "leading_order": True, "c": 1.0}
    for key in ("a0", "a_n", "g"):
        if key in r.meta:
            out[key] = r.meta[key]
    return out


def bounds_envelope(theta: float, beta: float, lam: float, ts) -> dict:
    log_G = B.g_envelope(theta, beta, lam)
    return {"theta": theta, "beta": beta, "lambda": lam, "t": list(ts),
            "log_G": [float(log_G(t)) for t in ts], "leading_order": True}


def bounds_lower_tail(alpha: float, d: int, x: float, ts) -> dict:
    return {"alpha": alpha, "d": d, "x_norm": x, "t": list(ts),
            "log_prob_bound": [B.passage_lower_tail_bound(alpha, d, x, t) for t in ts], "leading_order": True}


def classify(alpha: float, d: int, gamma: float = 1.0) -> dict:
    return B.phase_classify(alpha, d, gamma).as_dict()


def _emit(obj, out) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    print(text)


def cmd_bounds(args) -> int:
    if args.what == "ansatz":
        obj = bounds_ansatz(args.alpha, args.d, args.n)
    elif args.what == "envelope":
        obj = bounds_envelope(args.theta, args.beta, args.lam, _floats(args.t))
    elif args.what == "lower-tail":
        obj = bounds_lower_tail(args.alpha, args.d, args.x, _floats(args.t))
    else:
        obj = classify(args.alpha, args.d, args.gamma)
    _emit(obj, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    if args.config:
        cfg = RunConfig.load(args.config)
        alpha, d, gamma = cfg.alpha, cfg.d, cfg.gamma
    else:
        if args.alpha is None or args.d is None:
            raise ValueError("classify needs --alpha and --d (or --config)")
        alpha, d, gamma = args.alpha, args.d, args.gamma
    _emit(classify(alpha, d, gamma), args.out)
    return EXIT_OK


def render_run(run_dir, ts, replica: int = 0, classes: int = 6, out=None) -> list[Path]:
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    if manifest["config"]["d"] != 2:
        raise ValueError("rendering is supported for d = 2 only")
    snap = run_dir / f"sites_{replica}.csv"
    if not snap.exists():
        raise ValueError(f"{snap} missing: rerun simulate with snapshot = true")
    coords, times = read_snapshot(snap)
    if not ts:
        ts = [float(read_csv(run_dir / f"replica_{replica}.csv")[-1, 0])]
    out = Path(out) if out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in ts:
        name = snapshot_name(t) if replica == 0 else snapshot_name(t).replace(".ppm", f"_r{replica}.ppm")
        write_ppm(out / name, image(coords, times, t, classes))
        paths.append(out / name)
    return paths


def cmd_render(args) -> int:
    paths = render_run(args.run_dir, _floats(args.t) if args.t else [], args.replica, args.classes, args.out)
    for p in paths:
        print(p)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrfpp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lrfpp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI config or manifest.json")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("simulate", help="dispersal growth runs")
    common(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("oracle-check", help="dispersal vs Dijkstra law check")
    common(sp)
    sp.set_defaults(fn=cmd_oracle_check)

    sp = sub.add_parser("bounds", help="evaluate analytic bounds")
    sp.add_argument("what", choices=["ansatz", "envelope", "lower-tail", "classify"])
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--n", type=float, default=4096)
    sp.add_argument("--x", type=float, default=100)
    sp.add_argument("--t", default="1")
    sp.add_argument("--theta", type=float, default=0.25)
    sp.add_argument("--beta", type=float, default=2.0)
    sp.add_argument("--lam", type=float, default=1.0)
    sp.add_argument("--out", help="also write the JSON here")
    sp.set_defaults(fn=cmd_bounds)

    sp = sub.add_parser("classify", help="growth regime of (alpha, d, gamma)")
    sp.add_argument("--config")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--d", type=int)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--out", help="also write the JSON here")
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("render", help="PPM snapshots of a d = 2 run")
    sp.add_argument("run_dir")
    sp.add_argument("--t", help="comma-separated times (default: final time)")
    sp.add_argument("--replica", type=int, default=0)
    sp.add_argument("--classes", type=int, default=6)
    sp.add_argument("--out", help="output directory (default: the run directory)")
    sp.set_defaults(fn=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bounds" and args.alpha is None and args.what in ("ansatz", "lower-tail", "classify"):
        parser.error("--alpha is required")
    try:
        return args.fn(args)
    except (ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

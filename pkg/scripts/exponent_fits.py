"""Growth-exponent campaigns in d = 1 (stretched, superlinear, log-corrected regimes).

Runs the dispersal configs through the CLI, then reports the fitted exponent,
the target from the regime classifier and local slopes across the time range.
"""
from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from _common import local_slopes, pooled, simulate
from lrfpp import analysis as A

CAMPAIGNS = {
    "stretched": ("c04_stretched.ini", "fit_stretched", math.log(4 / 3) / math.log(2)),
    "superlinear-2.5": ("c05_superlinear_2.5.ini", "fit_superlinear", 2.0),
    "superlinear-2.75": ("c05_superlinear_2.75.ini", "fit_superlinear", 4 / 3),
    "log-corrected": ("c07_logcorrected.ini", "fit_log_corrected", None),
}


def report(name: str, run_dir: Path) -> dict:
    config, fit, target = CAMPAIGNS[name]
    series = pooled(run_dir)
    est = getattr(A, fit)(series)
    t, D = series[:, 0], series[:, 1]
    ok = (t > 0) & (D >= 3)
    t, D = t[ok], D[ok]
    print(f"== {name}: {est.kind} = {est.value:.4f} +- {est.stderr:.4f} over t in "
          f"[{est.fit_window[0]:.3g}, {est.fit_window[1]:.3g}]" + (f"; target {target:.4f}" if target else ""))
    if fit == "fit_stretched":
        ys = np.log(np.log(D))
    else:
        ys = np.log(D)
    for lo, hi, b in local_slopes(np.log(t), ys):
        print(f"   local slope t in [{math.exp(lo):9.4g}, {math.exp(hi):9.4g}]: {b:.3f}")
    if fit == "fit_log_corrected":
        r = A.log_squared_ratio(series)
        print(f"   log D/(log t)^2 over the final decade: [{r.min():.3f}, {r.max():.3f}], range {r.max() / r.min():.2f}")
        print(f"   preferred model: {est.meta['preferred']}")
    vol = pooled(run_dir, 1)
    m = vol[:, 0] > vol[-1, 0] / 5
    print(f"   d log V/dt over the final part: {np.polyfit(vol[m, 0], np.log(vol[m, 1]), 1)[0]:.3g}")
    return {"name": name, "estimate": est.value, "stderr": est.stderr, "target": target}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--only", choices=sorted(CAMPAIGNS), action="append")
    p.add_argument("--out", default="runs", help="parent directory for run directories")
    p.add_argument("--replicas", type=int, help="override the replica count (quick looks)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--reuse", action="store_true", help="analyse existing run directories")
    args = p.parse_args(argv)
    for name in args.only or CAMPAIGNS:
        run_dir = Path(args.out) / name
        if not (args.reuse and (run_dir / "summary.json").exists()):
            simulate(CAMPAIGNS[name][0], run_dir, args.jobs, args.replicas)
        report(name, run_dir)


if __name__ == "__main__":
    main()

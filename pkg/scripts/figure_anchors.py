"""Planar figure anchors: volume medians, component statistics and PPM renders.

For each (alpha, t) anchor, simulates the config on the agent clock, compares
the median log10 volume with a single-realization reference value and
renders replica 0 at six equispaced times.
"""
from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from _common import simulate
from lrfpp import analysis as A
from lrfpp.cli import render_run
from lrfpp.records import read_snapshot

ANCHORS = ((3.5, 24, 25421), (4.0, 48, 46113), (4.5, 60, 19635), (5.0, 90, 19534), (5.5, 90, 12911))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs")
    p.add_argument("--replicas", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--reuse", action="store_true")
    args = p.parse_args(argv)
    for alpha, t, vol in ANCHORS:
        run_dir = Path(args.out) / f"anchor_{alpha}"
        if not (args.reuse and (run_dir / "summary.json").exists()):
            simulate(f"c10_anchor_{alpha}.ini", run_dir, args.jobs, args.replicas)
        summary = json.loads((run_dir / "summary.json").read_text())
        med = summary["final"]["log10_volume_median"]
        counts, frac = [], []
        for i in range(summary["replicas"]):
            coords, _ = read_snapshot(run_dir / f"sites_{i}.csv")
            sz = A.component_sizes(coords)
            counts.append(len(sz))
            frac.append(sz[0] / sz.sum())
        render_run(run_dir, [t * (j + 1) / 6 for j in range(6)])
        print(f"alpha={alpha} t={t}: median log10 volume {med:.3f} vs {math.log10(vol):.3f} "
              f"(diff {med - math.log10(vol):+.3f}); components median {np.median(counts):.0f}, "
              f"largest-cluster fraction median {np.median(frac):.4f}")


if __name__ == "__main__":
    main()

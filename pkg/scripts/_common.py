"""Helpers shared by the experiment scripts."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from lrfpp import analysis as A
from lrfpp import cli
from lrfpp.records import read_csv

CONFIGS = Path(__file__).resolve().parent / "configs"


def simulate(config: str, out: Path, jobs: int = 1, replicas: int | None = None) -> Path:
    argv = ["simulate", "--config", str(CONFIGS / config), "--out", str(out), "--jobs", str(jobs)]
    if replicas is not None:
        argv += ["--replicas", str(replicas)]
    code = cli.main(argv)
    if code != 0:
        raise SystemExit(f"simulate {config} failed with exit code {code}")
    return out


def replica_rows(run_dir: Path) -> list[np.ndarray]:
    n = json.loads((run_dir / "manifest.json").read_text())["config"]["replicas"]
    return [read_csv(run_dir / f"replica_{i}.csv") for i in range(n)]


def pooled(run_dir: Path, column: int = 2) -> np.ndarray:
    return A.pooled_median(replica_rows(run_dir), column)


def local_slopes(x: np.ndarray, y: np.ndarray, width: int = 9) -> list[tuple[float, float, float]]:
    """Least-squares slopes over sliding windows of ``width`` points: (x_lo, x_hi, slope)."""
    out = []
    for i in range(0, len(x) - width + 1, max(1, width // 2)):
        b = np.polyfit(x[i:i + width], y[i:i + width], 1)[0]
        out.append((float(x[i]), float(x[i + width - 1]), float(b)))
    return out

"""Dispersal vs Dijkstra law check, with a mismatched-alpha control arm."""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from _common import CONFIGS
from lrfpp.cli import oracle_check
from lrfpp.records import RunConfig, write_json


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/oracle")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--control-alpha", type=float, default=3.0)
    args = p.parse_args(argv)
    cfg = RunConfig.load(CONFIGS / "c01_oracle.ini")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, c in (("matched", cfg), ("control", cfg.with_overrides(alpha_dispersal=args.control_alpha))):
        rep = oracle_check(c, args.jobs)
        write_json(out / f"{name}.json", rep)
        print(name, json.dumps({"pass": rep["pass"], "p": [r["p_bonferroni"] for r in rep["probes"]]}))


if __name__ == "__main__":
    main()

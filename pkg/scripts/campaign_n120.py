"""Quartic truncation at N=120 from psi^1 (hours on a desktop)."""

import argparse
from pathlib import Path

from lke.cli import RunConfig, run

parser = argparse.ArgumentParser()
parser.add_argument("--t-max", type=float, default=100.0)
parser.add_argument("--workers", type=int, default=1)
parser.add_argument("--out", default="results/n120")
args = parser.parse_args()

for h in (-1.0, -0.51):
    for alpha in (3.0, 5.0, 10.0):
        cfg = RunConfig(N=120, h=h, alpha=alpha, truncation="T4", state="psi:1", t_max=args.t_max,
                        method="rk4", workers=args.workers, memory_gb=8.0,
                        output=str(Path(args.out) / f"h{h:g}_alpha{alpha:g}"))
        print(f"h={h:g} alpha={alpha:g} exit={run(cfg)}")

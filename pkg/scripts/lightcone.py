"""Connected zz-correlations from the quartic truncation, (m, t) grid clipped at 1e-5."""

import argparse
from pathlib import Path

from lke.cli import RunConfig, run

parser = argparse.ArgumentParser()
parser.add_argument("--N", type=int, default=60)
parser.add_argument("--t-max", type=float, default=20.0)
parser.add_argument("--out", default="results/lightcone")
args = parser.parse_args()

for h in (-1.0, -0.51):
    cfg = RunConfig(mode="correlate", N=args.N, h=h, alpha=4.0, truncation="T4", state="psi:1",
                    t_max=args.t_max, sample_every=25, method="rk4", output=str(Path(args.out) / f"h{h:g}"))
    print(f"h={h:g} exit={run(cfg)}")

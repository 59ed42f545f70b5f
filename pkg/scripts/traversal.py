"""Quadratic-truncation trajectories of <S^z> from psi^1 up to past the traversal time."""

import argparse
from pathlib import Path

from lke.cli import RunConfig, run
from lke.model import ModelParams
from lke.observables import timescales

parser = argparse.ArgumentParser()
parser.add_argument("--N", type=int, default=200)
parser.add_argument("--h", type=float, default=-0.51)
parser.add_argument("--alphas", default="3,5,10,30")
parser.add_argument("--out", default="results/traversal")
args = parser.parse_args()

for alpha in map(float, args.alphas.split(",")):
    tau, trav = timescales(ModelParams(args.N, h=args.h, alpha=alpha))
    cfg = RunConfig(N=args.N, h=args.h, alpha=alpha, truncation="T2", state="psi:1", t_max=1.2 * trav,
                    method="rk4", output=str(Path(args.out) / f"N{args.N}_alpha{alpha:g}"))
    print(f"alpha={alpha:g} tau={tau:.2f} t_trav={trav:.0f} exit={run(cfg)}")

"""Six-truncation accuracy table against ED at N=10 (alpha 3 and 5)."""

import argparse
import json
from pathlib import Path

from lke.cli import RunConfig, run

parser = argparse.ArgumentParser()
parser.add_argument("--out", default="results/benchmark")
parser.add_argument("--t-max", type=float, default=30.0)
args = parser.parse_args()

for alpha in (3.0, 5.0):
    out = Path(args.out) / f"alpha{alpha:g}"
    cfg = RunConfig(mode="benchmark", N=10, alpha=alpha, state="psi:full", t_max=args.t_max, output=str(out))
    status = run(cfg)
    meta = json.loads(out.with_suffix(".meta.json").read_text())
    print(f"alpha={alpha:g} exit={status}", {k: f"{v:.2e}" for k, v in meta["delta_final"].items()})

"""Effective inverse temperature of psi^1 from ED at N=8,10,12, extrapolated in 1/N."""

import argparse

from lke.ed import extrapolate_inverse_size, match_beta
from lke.model import ModelParams, build_model
from lke.states import nu_psi1

parser = argparse.ArgumentParser()
parser.add_argument("--target-N", type=int, default=120)
args = parser.parse_args()

sizes = (8, 10, 12)
print("h,alpha,nu1,beta_8,beta_10,beta_12,beta_extrapolated")
for h in (-1.0, -0.51):
    for alpha in (3.0, 4.0, 8.0):
        nu = nu_psi1(build_model(ModelParams(args.target_N, h=h, alpha=alpha))[2])
        raw = [match_beta(ModelParams(n, h=h, alpha=alpha), nu) for n in sizes]
        beta = extrapolate_inverse_size(sizes, raw, args.target_N)
        print(",".join(f"{x:.6g}" for x in (h, alpha, nu, *raw, beta)))

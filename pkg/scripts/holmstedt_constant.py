"""Observed constant between the Holmstedt expression and the exact
K(t, a; l1, l2) over random coefficient vectors and random t.

    python3 scripts/holmstedt_constant.py [--trials 100000] [--seed 0]
"""

import argparse

import numpy as np

from radinterp.experiments import draw_coefficients
from radinterp.kfunc import k_l1_l2_seq
from radinterp.rademacher import holmstedt_phi


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    families = ("random_gaussian", "random_sparse", "harmonic")
    lo, hi, worst = np.inf, 0.0, None
    for i in range(args.trials):
        a = draw_coefficients(families[i % 3], int(rng.integers(1, 65)), rng)
        t = float(2.0 ** rng.uniform(-4, 6))
        r = holmstedt_phi(a, t) / k_l1_l2_seq(a, t)
        lo = min(lo, r)
        if r > hi:
            hi, worst = r, (t, a)
    print(f"min ratio {lo:.12f}  max ratio {hi:.6f} at t = {worst[0]:.4f}, n = {len(worst[1])}")


if __name__ == "__main__":
    main()

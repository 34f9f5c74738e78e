"""Ratio k_linf_lq(|Ta|*, sqrt n, q) / K(sqrt n, a; l1, l2) for a_k = 1/k.

Prints the ratio over a range of n and for two lattice steps, to show how
it moves with n and that the lattice law has converged.

    python3 scripts/remark2_scan.py [--q 4]
"""

import argparse
import math

import numpy as np

from radinterp.kfunc import k_l1_l2_seq, k_linf_lq
from radinterp.rademacher import synthesize_lattice


def ratio(n: int, q: float, step: float) -> float:
    a = 1.0 / np.arange(1, n + 1)
    x = synthesize_lattice(a, step).abs_rearrangement()
    t = math.sqrt(n)
    return float(k_linf_lq(x, t, q) / k_l1_l2_seq(a, t))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--q", type=float, default=4.0)
    args = ap.parse_args()
    print(f"{'n':>6} {'step 1e-3':>12} {'step 2.5e-4':>12} {'1/sqrt(ln n)':>13}")
    for n in (64, 256, 1024, 4096):
        r1, r2 = ratio(n, args.q, 1e-3), ratio(n, args.q, 2.5e-4)
        print(f"{n:6d} {r1:12.6f} {r2:12.6f} {1 / math.sqrt(math.log(n)):13.6f}")


if __name__ == "__main__":
    main()

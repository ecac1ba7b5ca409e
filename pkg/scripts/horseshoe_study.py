"""Distortion of kernel and linear-feature embeddings on the horseshoe.

Runs the full recipe and prints the bandwidth sweep and the comparison
between the kernel embedding and the two fixed feature matrices.

    python3 scripts/horseshoe_study.py --out runs/horseshoe [--seed 1] [--M 100]
"""

import argparse
from dataclasses import replace

from tmkernel.pipelines import HorseshoeRecipe, repro_horseshoe


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/horseshoe")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--M", type=int, default=HorseshoeRecipe.M)
    p.add_argument("--beta", type=float, default=HorseshoeRecipe.beta)
    args = p.parse_args()

    recipe = replace(HorseshoeRecipe(), seed=args.seed, M=args.M, beta=args.beta)
    s = repro_horseshoe(args.out, recipe)
    print(f"{'sigma':>8} {'L2_1/rho':>10} {'L2':>10} {'hist L2_1/rho':>14} {'hist L2':>10}")
    for row in s["sweep"]:
        print(f"{row['sigma']:8.0e} {row['distortion_inv_rho']:10.1f} {row['distortion_l2']:10.1f} "
              f"{row['distortion_hist_inv_rho']:14.1f} {row['distortion_hist_l2']:10.1f}")
    print(f"kernel (sigma={recipe.sigma:g}) {s['distortion_kernel']:.1f}, "
          f"good features {s['distortion_whitney_good']:.1f}, bad features {s['distortion_whitney_bad']:.1f}")
    print(f"artifacts in {args.out}")


if __name__ == "__main__":
    main()

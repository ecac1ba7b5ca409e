"""Equilibrium histogram of the 1D double well against exp(-beta V) / Z.

Compares one long trajectory with the same number of steps split over
trajectories started at equilibrium quantiles.

    python3 scripts/equilibrium.py [--beta 3] [--steps 1000000] [--seeds 1 2 3]
"""

import argparse
import time

import numpy as np
from scipy.integrate import quad

from tmkernel.dynamics import SdeConfig, double_well, trajectory
from tmkernel.rng import Stream


def exact_bins(beta, edges):
    w = lambda x: np.exp(-beta * (x * x - 1) ** 2)
    Z = quad(w, -3, 3, epsabs=0, epsrel=1e-12)[0]
    return np.array([quad(w, a, b)[0] for a, b in zip(edges[:-1], edges[1:])]) / Z


def l1(samples, exact, edges):
    return float(np.abs(np.histogram(samples, edges)[0] / samples.size - exact).sum())


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=10 ** 6)
    p.add_argument("--starts", type=int, default=1000)
    p.add_argument("--bins", type=int, default=80)
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    args = p.parse_args()

    pot = double_well(1)
    edges = np.linspace(-2, 2, args.bins + 1)
    exact = exact_bins(args.beta, edges)
    xs = np.linspace(-2.5, 2.5, 20001)
    cdf = np.cumsum(np.exp(-args.beta * (xs ** 2 - 1) ** 2))
    x0 = np.interp((np.arange(args.starts) + 0.5) / args.starts, cdf / cdf[-1], xs)
    frames = args.steps // args.starts
    print("seed  single-run L1  stratified L1  seconds")
    for seed in args.seeds:
        cfg = SdeConfig(args.beta, args.dt, args.dt, seed=seed)
        t = time.perf_counter()
        single = trajectory(pot, cfg, [-1.0], args.steps)[:, 0]
        split = np.concatenate([trajectory(pot, cfg, [x0[i]], frames, stream=Stream(seed, i, 0))[:, 0]
                                for i in range(args.starts)])
        print(f"{seed:4d}  {l1(single, exact, edges):13.4f}  {l1(split, exact, edges):13.4f}  "
              f"{time.perf_counter() - t:7.2f}")


if __name__ == "__main__":
    main()

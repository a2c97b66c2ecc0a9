"""How conservative is the coupling bound?

For random agents and spanning-tree graphs, bisect for the smallest mu
whose diagonal blocks are all stable and compare it with the bound.

    python scripts/bound_sweep.py [--instances 50] [--seed 1]
"""
import argparse
import math

import numpy as np

from impulsive_sync import (AgentSystem, CouplingGraph, analyze_spectrum, controllability_matrix,
                            design_deadbeat, diagonal_blocks, laplacian, mu_bound)
from impulsive_sync import matlib as ml


def random_instance(rng):
    while True:
        n = int(rng.integers(1, 5))
        sys = AgentSystem(rng.normal(size=(n, n)), rng.normal(size=n), rng.uniform(0.2, 1.5))
        if sys.is_controllable() and np.linalg.cond(controllability_matrix(sys)) < 1e4:
            break
    q = int(rng.integers(2, 7))
    w = np.zeros((q, q))
    perm = rng.permutation(q)
    for idx in range(1, q):
        w[perm[idx], perm[rng.integers(0, idx)]] = rng.uniform(0.2, 2.0)
    return sys, analyze_spectrum(laplacian(CouplingGraph(w)))


def radius(design, eigs, mu):
    return max(ml.spectral_radius(D) for D in diagonal_blocks(design, eigs, mu))


def critical_mu(design, eigs, hi):
    # smallest mu with radius < 1, assuming monotone crossing below hi
    lo = 0.0
    if radius(design, eigs, hi) >= 1:
        return math.nan
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if radius(design, eigs, mid) < 1:
            hi = mid
        else:
            lo = mid
    return hi


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)

    ratios = []
    print(f"{'n':>2} {'q':>2} {'bound':>10} {'critical':>10} {'ratio':>7}")
    for _ in range(args.instances):
        sys, spec = random_instance(rng)
        design = design_deadbeat(sys)
        b = mu_bound(design, spec.lambda2)
        if b <= 0:
            continue
        c = critical_mu(design, spec.eigenvalues[1:], 1.01 * b)
        ratios.append(c / b)
        print(f"{sys.n:2d} {spec.q:2d} {b:10.4f} {c:10.4f} {c / b:7.3f}")
    r = np.array(ratios)
    print(f"critical / bound: median {np.nanmedian(r):.3f}, max {np.nanmax(r):.3f} over {r.size} instances")


if __name__ == "__main__":
    main()

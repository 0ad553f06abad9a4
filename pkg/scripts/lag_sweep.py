#!/usr/bin/env python3
"""Sweep the asynchrony bound D on the scalar fixture and report
iterations-to-tolerance, averaged over seeds.

Usage: python scripts/lag_sweep.py
"""

import numpy as np

import pdsplit as ps


def scalar_problem():
    sig = ps.SpaceSignature((1,), (1,))
    return ps.ProblemSpec(
        sig, [ps.l1_norm(1)], [ps.affine_monotone([[1.0]])],
        ps.CouplingMap(sig, {(0, 0): [[1.0]]}),
        ps.BlockVector([[0.0]]), ps.BlockVector([[0.0]]))


def main():
    prob = scalar_problem()
    start = ps.PrimalDualPoint(ps.BlockVector([[2.0]]), ps.BlockVector([[0.0]]))
    cfg = ps.SolverConfig(mode="fejer", relaxation=1.9, max_iter=5000,
                          resid_tol=1e-6, start=start)
    seeds = range(8)
    print(f"{'D':>3} {'mean iters':>11} {'max iters':>10}")
    for D in (0, 1, 2, 5, 10, 20):
        counts = []
        for seed in seeds:
            if D == 0:
                sched = ps.synchronous(1, 1)
            else:
                sched = ps.random_admissible(1, 1, M=1, D=D, horizon=1024, seed=seed)
            res = ps.run(prob, cfg, sched)
            assert res.status == "solved", res.status
            counts.append(res.iterations)
            if D == 0:
                break  # synchronous runs are seed-independent
        print(f"{D:>3} {np.mean(counts):>11.1f} {max(counts):>10}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regularization sweep on one noise path.

Usage: python3 scripts/sweep_epsilon.py [seed [eps ...]]

Solves the same path at each eps (must be non-increasing) and prints
the consecutive and pairwise sup-t dual-norm distances, the numbers
behind the Cauchy-in-eps claim.
"""

import sys

import numpy as np

from logdiff import (
    Field,
    GridSpec,
    NoiseSpec,
    PowerLawGammas,
    SolverConfig,
    eigensystem,
    epsilon_sweep,
    synthesize,
)


def main() -> int:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 21
    eps = [float(a) for a in sys.argv[2:]] or [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]

    grid = GridSpec(length=1.0, n_interior=127)
    eigen = eigensystem(grid, 8)
    spec = NoiseSpec(k_max=8, gammas=PowerLawGammas(gamma0=1.0, decay=8.0),
                     seed=seed, t_final=0.5, n_steps=500)
    path = synthesize(spec, grid, eigen)
    x0 = Field(grid, np.zeros(grid.n_interior))

    rep = epsilon_sweep(x0, path, SolverConfig(epsilon=eps[0], dt=1e-3, t_final=0.5), eps)

    print(f"seed {seed}, eps {eps}")
    print("consecutive sup-t |Y_i - Y_{i+1}|_-1:")
    for i, d in enumerate(rep.consecutive):
        print(f"  {rep.epsilons[i]:.1e} vs {rep.epsilons[i + 1]:.1e}:  {d:.6e}")
    print(f"strictly decreasing: {rep.monotone_decreasing}")
    print("pairwise matrix:")
    for row in rep.pairwise:
        print("  " + "  ".join(f"{d:.3e}" for d in row))
    return 0 if rep.monotone_decreasing else 1


if __name__ == "__main__":
    sys.exit(main())

"""Grid-refinement study for the Neumann eigenproblem and the wave identities.

Reports observed orders for the raw eigenvalues, the first characteristic
identity on marched wave solutions, and the second identity on a separated
eigen-solution, for the truncated Gaussian density.
"""

import argparse

import numpy as np

from hypergroup_lab.sturm_liouville_wave import (
    SLProblem, convergence_order, repr1_residual, repr2_residual, solve_neumann_eigens, wave_solve)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("-K", type=int, default=6)
    args = ap.parse_args()
    prob = SLProblem.gaussian(args.sigma)
    orders = convergence_order(prob, [250, 500, 1000, 2000], args.K)
    print("eigenvalue orders (rows: 250/500/1000, 500/1000/2000):")
    print(np.array2string(orders, precision=4))

    data = lambda x: 1 + np.cos(np.pi * (x + 1) / 2) ** 2  # noqa: E731
    prev = None
    for n in (100, 200, 400, 800):
        sol = wave_solve(prob, data, n)
        r = repr1_residual(prob, sol.F, sol.x, n // 2, n // 4)
        tag = "" if prev is None else f"  order {np.log2(prev / r):.3f}"
        print(f"repr1 n={n:4d} residual {r:.3e}{tag}")
        prev = r

    basis = solve_neumann_eigens(prob, 4000, 6)
    f2 = basis.splines()[2]
    base = basis.eigenfunctions[2][0]
    F = lambda x, y: f2(x) * f2(y) / base  # noqa: E731
    prev = None
    for n in (16, 32, 64):
        r = repr2_residual(prob, F, (0.1, -0.4), n)
        tag = "" if prev is None else f"  order {np.log2(prev / r):.3f}"
        print(f"repr2 lattice={n:3d} residual {r:.3e}{tag}")
        prev = r


if __name__ == "__main__":
    main()

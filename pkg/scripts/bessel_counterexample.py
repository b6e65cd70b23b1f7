"""Constant-kernel Volterra solutions against the Bessel threshold.

With interior density a < 0, weights 1/2 at the feet and data 1 on the base,
the solution over a triangle with base length D is cos(sqrt(-a/2) D). The
script tabulates the threshold predicate, the lattice solution minimum and
the closed form for a range of a at area 1.
"""

import argparse
import math

import numpy as np

from hypergroup_lab.sturm_liouville_wave import (
    CharacteristicGrid, SLProblem, bessel_threshold, constant_family, volterra_solve)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--area", type=float, default=1.0)
    ap.add_argument("--lattice", type=int, default=32)
    args = ap.parse_args()
    D = 2 * math.sqrt(args.area)
    thr = bessel_threshold(args.area)
    prob = SLProblem.uniform(D)
    cg = CharacteristicGrid.build(prob, -D / 2, D / 2, args.lattice)
    print(f"threshold -mu0^2/(2 area) = {thr:.12f}")
    print(f"{'a_min':>7} {'criterion':>9} {'lattice min':>12} {'closed form':>12}")
    for a in np.arange(-0.4, -3.21, -0.4):
        res = volterra_solve(constant_family(a), cg, np.ones(args.lattice + 1))
        exact = math.cos(math.sqrt(-a / 2) * D)
        print(f"{a:7.2f} {str(a >= thr):>9} {res.values.min():12.6f} {min(exact, 1.0):12.6f}")


if __name__ == "__main__":
    main()

"""Minimum of the regularized Jacobi product kernel across (p, q).

Prints one line per parameter pair with the positivity-region flag, so the
sign of the scan can be compared with the region boundary.
"""

import argparse

from hypergroup_lab.jacobi_gasper import gasper_positivity_region, jacobi_basis, kernel_scan

PAIRS = [(3, 5), (2.5, 4.7), (2, 2), (1.5, 2.2), (1, 3), (0.8, 3.4), (0.5, 0.8), (0.5, 2.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-K", type=int, default=20)
    ap.add_argument("-t", type=float, default=0.05)
    ap.add_argument("--grid", type=int, default=15)
    args = ap.parse_args()
    print(f"{'p':>5} {'q':>5} {'region':>7} {'min':>12}  argmin")
    for p, q in PAIRS:
        scan = kernel_scan(jacobi_basis(p, q, args.K), args.K, args.t, args.grid)
        arg = ", ".join(f"{v:+.3f}" for v in scan.argmin)
        print(f"{p:5.2f} {q:5.2f} {str(gasper_positivity_region(p, q)):>7} "
              f"{scan.min_value:12.4e}  ({arg})")


if __name__ == "__main__":
    main()

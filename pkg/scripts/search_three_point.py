"""Seeded search for a 3-point orthogonal matrix with GKS but without HGP.

The matrix is determined by (O00, O01, O10) and a branch bit. The first hit
is written to tests/data/three_point_gks_not_hgp.json.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from hypergroup_lab.finite_hypergroup import (
    GKSPointError, find_gks_point, from_orthogonal, is_gks, is_hgp, three_point_orthogonal)


def search(trials: int, seed: int, margin: float = 1e-3):
    rng = np.random.default_rng(seed)
    for t in range(trials):
        o00, o01, o10 = rng.uniform(0.05, 0.95, 3)
        O = three_point_orthogonal(o00, o01, o10, int(rng.integers(0, 2)))
        if O is None:
            continue
        space = from_orthogonal(O)
        g = is_gks(space)
        if not g.passed or g.min_coefficient < 0:
            continue
        try:
            x0 = find_gks_point(space).index
        except GKSPointError:
            continue
        h = is_hgp(space, x0)
        if h.min_value < -margin:
            return t, space, x0, g, h
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--output", type=Path,
                    default=Path(__file__).resolve().parents[1] / "tests/data/three_point_gks_not_hgp.json")
    args = ap.parse_args()
    found = search(args.trials, args.seed)
    if found is None:
        raise SystemExit("no instance found")
    t, space, x0, g, h = found
    record = space.to_dict()
    record.update({"seed": args.seed, "trial": t, "x0": x0,
                   "gks_min": g.min_coefficient, "hgp_min": h.min_value,
                   "hgp_witness": list(h.witness)})
    args.output.write_text(json.dumps(record, indent=2) + "\n")
    print(f"trial {t}: GKS min {g.min_coefficient:.3e}, HGP min {h.min_value:.3e} at {h.witness}")


if __name__ == "__main__":
    main()

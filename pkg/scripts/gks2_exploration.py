"""Seeded search for violations of the second GKS-type inequality.

Runs the search on several GKS spaces and writes the minima found to
tests/data/gks2_exploration.json. The values are a record of the search,
not a statement about the inequality.
"""

import argparse
import json
from pathlib import Path

from hypergroup_lab.finite_hypergroup import gks2_search, hypercube, two_point
from hypergroup_lab.group_characters import character_table, cyclic_group, real_space, realify


def spaces():
    yield "hypercube3", hypercube(3)
    yield "hypercube2", hypercube(2)
    yield "two_point_pi_3", two_point(1.0471975511965976)
    yield "z4_realified", real_space(realify(character_table(cyclic_group(4))))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--output", type=Path,
                    default=Path(__file__).resolve().parents[1] / "tests/data/gks2_exploration.json")
    args = ap.parse_args()
    record = {"trials": args.trials, "seed": args.seed, "minima": {}}
    for name, space in spaces():
        res = gks2_search(space, args.trials, args.seed)
        record["minima"][name] = res.min_correlation
        print(f"{name:16s} min correlation {res.min_correlation:+.3e}")
    args.output.write_text(json.dumps(record, indent=2) + "\n")


if __name__ == "__main__":
    main()

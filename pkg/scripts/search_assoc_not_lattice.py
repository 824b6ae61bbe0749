"""Randomized search for measures that are associated but fail the lattice condition."""

import argparse
import itertools
import json
import random

from fkglab.association import is_associated_bruteforce
from fkglab.fkg import fkg_lattice_condition
from fkglab.measures import AtomicMeasure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tries", type=int, default=5000)
    ap.add_argument("--show", type=int, default=3)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    cells = list(itertools.product(range(3), range(2)))
    hits = []
    for _ in range(args.tries):
        pts = rng.sample(cells, rng.randint(3, len(cells)))
        m = AtomicMeasure.from_weights({p: rng.randint(1, 5) for p in pts})
        if not fkg_lattice_condition(m).holds and is_associated_bruteforce(m).holds:
            hits.append(m)
    print(f"{len(hits)} of {args.tries} random measures are associated but not lattice")
    for m in sorted(hits, key=len)[: args.show]:
        print(json.dumps(m.to_json()))


if __name__ == "__main__":
    main()

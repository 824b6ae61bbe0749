"""Crossing verdicts for lazy_srw(gamma) over a grid of gamma.

For each gamma the script writes the worst crossing ratio rhs/lhs over the
window (below 1 means the kernel fails), which should cross 1 at gamma = 1/3.
"""

import argparse
import csv
from fractions import Fraction
from pathlib import Path

from fkglab.fkg import has_unfavorable_crossings
from fkglab.measures import kernel_from_increments, lazy_srw


def worst_ratio(kernel):
    worst = None
    xs = list(kernel.window)
    for i, u1 in enumerate(xs):
        for v1 in xs[i + 1 :]:
            for u2, pu in kernel.rows[u1].items():
                for v2, pv in kernel.rows[v1].items():
                    if v2 >= u2:
                        continue
                    r = kernel.rows[v1].get(u2, 0) * kernel.rows[u1].get(v2, 0) / (pu * pv)
                    worst = r if worst is None else min(worst, r)
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--out", type=Path, default=Path("results/gamma_sweep.csv"))
    args = ap.parse_args()

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma", "holds", "worst_ratio"])
        for k in range(args.steps + 1):
            g = Fraction(k, args.steps)
            kern = kernel_from_increments(lazy_srw(g), (-4, 4))
            holds = has_unfavorable_crossings(kern, kern.window).holds
            r = worst_ratio(kern)
            w.writerow([float(g), int(holds), "" if r is None else float(r)])
            if k and (g >= Fraction(1, 3)) != holds:
                print(f"unexpected verdict at gamma={g}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

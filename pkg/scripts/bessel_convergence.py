"""Diagnostic: E[X_n / sqrt(n)] for the Bessel birth-death chain against the
closed-form mean of the Bessel process at T = 1.

This is a sanity check on the scaling, not a convergence proof.
"""

import argparse
import csv
import math
from fractions import Fraction
from pathlib import Path

from fkglab.markov import ChainSpec, PathEvent, condition_on_event, sample_conditioned
from fkglab.processes import bessel_kernel, bessel_mean


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nu", type=str, nargs="+", default=["-1/2", "0", "1"])
    ap.add_argument("--n", type=int, nargs="+", default=[16, 64, 256])
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/bessel_convergence.csv"))
    args = ap.parse_args()

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu", "n", "mean", "stderr", "limit"])
        for nu in args.nu:
            limit = bessel_mean(float(Fraction(nu)), 1.0)
            for n in args.n:
                law = condition_on_event(ChainSpec(bessel_kernel(nu, n + 2), 0, n), PathEvent.full())
                X = sample_conditioned(law, args.seed, args.samples)[:, -1] / math.sqrt(n)
                se = X.std(ddof=1) / math.sqrt(len(X))
                w.writerow([nu, n, X.mean(), se, limit])
                print(f"nu={nu:>5} n={n:5d}  mean={X.mean():.4f} +- {2 * se:.4f}  limit={limit:.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

"""Run every acceptance suite and write one JSON summary."""

import argparse
import json
from pathlib import Path

from fkglab.suites import DEFAULT_SEED, SUITES, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/suites.json"))
    ap.add_argument("names", nargs="*", default=list(SUITES))
    args = ap.parse_args()

    results = [r for name in args.names for r in run_suite(name, args.seed, args.threads)]
    for r in results:
        print(r.line())
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps([r.to_json() for r in results], indent=2, default=str) + "\n")
    return 0 if all(r.passed and r.within_budget for r in results) else 1


if __name__ == "__main__":
    raise SystemExit(main())

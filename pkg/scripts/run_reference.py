#!/usr/bin/env python3
"""Time DI, ISM and WMI at s=1287 over the reference k list and summarize.

Writes the full CSV and prints, per k, the fastest method, each method's
median time and the Frobenius residuals.
"""

import argparse
import logging
import sys
from pathlib import Path

from invupdate import bench
from invupdate.costmodel import CONCRETE_METHODS

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=ROOT / "configs" / "reference.json")
    p.add_argument("--out", default="reference.csv")
    p.add_argument("--reps", type=int, help="override reps from the config")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    config = bench.BenchConfig.from_json(args.config)
    if args.reps:
        config.reps = args.reps
    records = bench.run_bench(config, lambda r: logging.info("s=%d k=%d %s %.4gs", r.s, r.k, r.method.value, r.median_time_s))
    with open(args.out, "w", newline="") as fh:
        bench.write_csv(records, fh)

    by_cell = {}
    for r in records:
        by_cell.setdefault((r.s, r.k), {})[r.method] = r
    best = bench.winners(records)
    names = [m.value for m in CONCRETE_METHODS]
    print(f"{'s':>5} {'k':>5} {'best':>4}  " + "  ".join(f"{n + ' ms':>10}" for n in names) + "  " + "  ".join(f"{n + ' err':>10}" for n in names))
    for (s, k), cell in sorted(by_cell.items()):
        times = "  ".join(f"{cell[m].median_time_s * 1e3:10.3f}" for m in CONCRETE_METHODS)
        errs = "  ".join(f"{cell[m].error_frobenius:10.2e}" for m in CONCRETE_METHODS)
        print(f"{s:5d} {k:5d} {best[(s, k)].value:>4}  {times}  {errs}")
    cond = next(iter(records)).cond
    print(f"\ncondition number of the fitted moment matrix: {cond:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

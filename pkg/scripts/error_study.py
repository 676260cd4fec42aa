#!/usr/bin/env python3
"""Frobenius residual of each method as k grows, without timing.

Useful for comparing the small-sample regime (S close to s) with a
large-sample one (S >= 10 s).
"""

import argparse
import sys

from invupdate import bench
from invupdate.costmodel import CONCRETE_METHODS


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--S", type=int, default=2000)
    p.add_argument("--s", type=int, default=1287)
    p.add_argument("--ks", type=int, nargs="+", default=[1, 2, 5, 10, 50, 100, 200, 500])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ridge", type=float, default=1e-8)
    args = p.parse_args(argv)

    config = bench.BenchConfig(S=args.S, sizes=[args.s], ks=args.ks, reps=1, seed=args.seed, ridge=args.ridge, warmup=False)
    data = bench.gen_dataset(args.S, args.s, args.seed)
    print("k," + ",".join(m.value for m in CONCRETE_METHODS) + ",cond")
    for k in args.ks:
        cell = bench.prepare_cell(data, k, args.ridge if args.S - k <= args.s else 0.0)
        errs = [bench.run_prepared(config, cell, m).error_frobenius for m in CONCRETE_METHODS]
        print(f"{k}," + ",".join(f"{e:.3e}" for e in errs) + f",{cell.cond:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

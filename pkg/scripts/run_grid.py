#!/usr/bin/env python3
"""Fastest method over an (s, k) grid, written as CSV and an SVG heatmap.

Also reports, per s, the largest k where WMI still beats DI, next to the
``s / 3`` rule and the cost-model crossover.
"""

import argparse
import logging
import sys
from pathlib import Path

from invupdate import bench, costmodel
from invupdate.costmodel import UpdateMethod

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=ROOT / "configs" / "grid.json")
    p.add_argument("--out", default="grid.csv")
    p.add_argument("--svg", default="grid.svg")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    config = bench.BenchConfig.from_json(args.config)
    records, best = bench.fastest_grid(config, lambda r: logging.info("s=%d k=%d %s", r.s, r.k, r.method.value))
    with open(args.out, "w", newline="") as fh:
        bench.write_csv(records, fh)
    Path(args.svg).write_text(bench.winner_svg(best))

    print(f"{'s':>5} {'last WMI win':>12} {'s/3':>6} {'cubic':>8}")
    for s in sorted({s for s, _ in best}):
        wmi_ks = [k for (ss, k), m in best.items() if ss == s and m is UpdateMethod.WMI]
        last = max(wmi_ks) if wmi_ks else "-"
        print(f"{s:5d} {last!s:>12} {costmodel.rule_boundary(s):6d} {costmodel.threshold_di_over_wmi(s):8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, costmodel
from .basis import enumerate_basis
from .christoffel import Detector, DetectorConfig, LearnPolicy, inverse_cf_batch, report
from .costmodel import UpdateMethod
from .errors import InvUpdateError, MissingMatrix, NumericalError, ShapeError
from .moment import fit, load_snapshot, save_snapshot

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("invupdate")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _read_points(path):
    try:
        if path == "-":
            rows = list(csv.reader(sys.stdin))
        else:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read points: {exc}") from exc
    rows = [r for r in rows if r and not r[0].lstrip().startswith("#")]
    try:
        pts = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise DataError(f"points file is not numeric CSV: {exc}") from exc
    if pts.ndim != 2 or len(pts) == 0:
        raise DataError("points file must hold one or more rows with the same number of columns")
    return pts


def _load_state(path):
    try:
        return load_snapshot(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load snapshot {path}: {exc}") from exc


def _emit(rows, header, pretty, out=None):
    out = out or sys.stdout
    if pretty:
        table = [header] + rows
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        for r in table:
            out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n")
    else:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _bench_config(args):
    try:
        config = bench.BenchConfig.from_json(args.config) if args.config else bench.BenchConfig()
        if args.seed is not None:
            config.seed = args.seed
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"invalid benchmark config: {exc}") from exc
    return config


def _progress(rec):
    status = "ok" if rec.ok else f"FAILED ({rec.failure})"
    log.info("s=%d k=%d %s median=%.3gs error=%.3g %s", rec.s, rec.k, rec.method.value, rec.median_time_s, rec.error_frobenius, status)


def _write_records(records, out_path):
    with open(out_path, "w", newline="") as fh:
        bench.write_csv(records, fh)


def _failed(records):
    bad = [r for r in records if not r.ok]
    for r in bad:
        print(f"failed cell s={r.s} k={r.k} method={r.method.value}: {r.failure}", file=sys.stderr)
    return bad


def cmd_bench(args):
    config = _bench_config(args)
    records = bench.run_bench(config, _progress)
    if args.out:
        _write_records(records, args.out)
    if args.pretty or not args.out:
        _emit([r.csv_row() for r in records], bench.CSV_HEADER, args.pretty)
    bad = _failed(records)
    return EXIT_NUMERICAL if bad and args.strict else EXIT_OK


def cmd_grid(args):
    config = _bench_config(args)
    records, winner_map = bench.fastest_grid(config, _progress)
    if args.out:
        _write_records(records, args.out)
    rows = [[str(s), str(k), m.value] for (s, k), m in sorted(winner_map.items())]
    _emit(rows, ["s", "k", "winner"], args.pretty)
    if args.svg:
        Path(args.svg).write_text(bench.winner_svg(winner_map))
    bad = _failed(records)
    return EXIT_NUMERICAL if bad and args.strict else EXIT_OK


def cmd_thresholds(args):
    header = ["s", "di_over_ism", "di_over_wmi_cubic", "di_over_wmi_empirical", "rule_boundary"]
    rows = []
    for raw in args.sizes:
        try:
            s = int(raw)
        except ValueError:
            raise UsageError(f"matrix size must be an integer, got {raw!r}") from None
        if s < 1:
            raise UsageError(f"matrix size must be >= 1, got {s}")
        values = (
            costmodel.threshold_di_over_ism(s),
            costmodel.threshold_di_over_wmi(s),
            costmodel.empirical_threshold_di_over_wmi(s),
        )
        fmt = "{:.3f}" if args.pretty else "{:.9g}"
        rows.append([str(s), *(fmt.format(v) for v in values), str(costmodel.rule_boundary(s))])
    _emit(rows, header, args.pretty)
    return EXIT_OK


def _score_rows(qs, gamma, start=0):
    rows = []
    for i, q in enumerate(qs, start):
        rep = report(q, gamma)
        rows.append([str(i), f"{rep.inverse_cf:.17g}", f"{rep.score:.17g}", str(int(rep.is_outlier))])
    return rows


SCORE_HEADER = ["index", "inverse_cf", "score", "is_outlier"]


def _check_dims(state, points):
    if state.basis is None:
        raise DataError("snapshot has no monomial basis; it cannot score points")
    if points.shape[1] != state.basis.d:
        raise DataError(f"points have {points.shape[1]} columns, model expects d={state.basis.d}")


def cmd_score(args):
    state = _load_state(args.model)
    points = _read_points(args.points)
    _check_dims(state, points)
    if args.gamma is not None and not args.gamma > 0:
        raise UsageError("--gamma must be positive")
    gamma = args.gamma if args.gamma is not None else float(state.s)
    _emit(_score_rows(inverse_cf_batch(state, points), gamma), SCORE_HEADER, args.pretty)
    return EXIT_OK


def cmd_stream(args):
    state = _load_state(args.model)
    points = _read_points(args.points)
    _check_dims(state, points)
    try:
        config = DetectorConfig(
            d=state.basis.d,
            n=state.basis.n,
            gamma=args.gamma,
            learn_policy=args.policy,
            batch_size=args.k,
            method=args.method,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        detector = Detector(state, config)
    except MissingMatrix as exc:
        raise DataError(str(exc)) from exc
    rows = []
    for i, x in enumerate(points):
        rep = detector.step(x)
        rows.append([str(i), f"{rep.inverse_cf:.17g}", f"{rep.score:.17g}", str(int(rep.is_outlier))])
    if detector.pending:
        log.info("%d buffered point(s) left unlearned (incomplete batch)", len(detector.pending))
    _emit(rows, SCORE_HEADER, args.pretty)
    if args.save:
        save_snapshot(detector.state, args.model)
    return EXIT_OK


def cmd_snapshot(args):
    if args.show:
        state = _load_state(args.show)
        info = {
            "d": None if state.basis is None else state.basis.d,
            "n": None if state.basis is None else state.basis.n,
            "s": state.s,
            "N": state.n_samples,
            "ridge": state.ridge,
            "track_matrix": state.track_matrix,
            "rounds": state.rounds,
        }
        print(json.dumps(info, indent=2 if args.pretty else None))
        return EXIT_OK
    if not (args.points and args.out and args.degree is not None):
        raise UsageError("snapshot needs --points, --degree and --out (or --show PATH)")
    points = _read_points(args.points)
    basis = enumerate_basis(points.shape[1], args.degree)
    state = fit(points, basis, ridge=args.ridge, track_matrix=args.track_matrix)
    save_snapshot(state, args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="invupdate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_bench_flags(p):
        p.add_argument("--config", help="JSON document with BenchConfig fields")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--strict", action="store_true", help="exit 4 if any cell failed")
        p.add_argument(
            "--serial-timing",
            action="store_true",
            default=True,
            help="time one cell at a time (always on; kept for scripts)",
        )
        p.add_argument("--pretty", action="store_true")

    p = sub.add_parser("bench", help="time the update methods over a set of cells")
    add_bench_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("grid", help="fastest method per (s, k) pair")
    add_bench_flags(p)
    p.add_argument("--svg", help="write a heatmap of the winners")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("thresholds", help="crossover values of k for each matrix size")
    p.add_argument("sizes", nargs="+")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_thresholds)

    def add_model_flags(p):
        p.add_argument("--model", required=True, help="snapshot file")
        p.add_argument("--points", required=True, help="CSV of points, one per line ('-' for stdin)")
        p.add_argument("--gamma", type=float)
        p.add_argument("--pretty", action="store_true")

    p = sub.add_parser("score", help="score points against a snapshot")
    add_model_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stream", help="score points and learn from them")
    add_model_flags(p)
    p.add_argument("--k", type=int, default=1, help="update batch size")
    p.add_argument("--method", choices=[m.value for m in UpdateMethod], default="auto")
    p.add_argument("--policy", choices=[p.value for p in LearnPolicy], default="inliers")
    p.add_argument("--save", action="store_true", help="write the updated state back to --model")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("snapshot", help="fit a snapshot from training points, or inspect one")
    p.add_argument("--points")
    p.add_argument("--degree", type=int)
    p.add_argument("--out")
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--track-matrix", action="store_true")
    p.add_argument("--show", metavar="PATH")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_snapshot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ShapeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvUpdateError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

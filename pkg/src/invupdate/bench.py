"""Timing, accuracy and conditioning measurements for the three update kernels.

A cell is one (s, k, method) triple. For each s a dataset of S rows is drawn;
the first N = S - k rows are fitted once, then only the kernel step is timed
on the remaining k rows. Normalization, fitting and data generation stay out
of the timing window.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import statistics
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import costmodel
from .basis import basis_size, enumerate_basis, vectorize_batch
from .costmodel import CONCRETE_METHODS, UpdateMethod
from .errors import ConditioningFailure, InvUpdateError
from .moment import moment_matrix
from .update import _cholesky_inverse, run_kernel

log = logging.getLogger(__name__)

CSV_HEADER = ["s", "k", "method", "reps", "mean_time_s", "median_time_s", "error_frobenius", "cond"]
PAPER_KS = [1, 2, 3, 4, 5, 10, 20, 30, 40, 50, 100, 200, 300, 400, 500, 750, 1000]
PAPER_GRID_SIZES = [10, 20, 50, 100, 250, 500, 750, 1000]


class DataMode(enum.Enum):
    RANDOM_DESIGN = "random_design"
    EMBEDDED = "embedded"


@dataclass
class BenchConfig:
    """Experiment description; field names double as JSON keys.

    ``sizes`` holds plain matrix sizes s or ``[d, n]`` pairs (required for
    EMBEDDED data). Cells with ``N = S - k <= s`` are only run when ``ridge``
    is positive, because the starting moment matrix is singular otherwise.
    ``rep_budget_s`` and ``flop_rate`` drive the rep reduction: a cell whose
    predicted time per rep (published FLOP count / ``flop_rate``) exceeds the
    budget runs ``reps // reduce_factor`` reps instead.
    """

    S: int = 2000
    sizes: list = field(default_factory=lambda: [[8, 5]])
    ks: list = field(default_factory=lambda: list(PAPER_KS))
    reps: int = 200
    seed: int = 0
    data_mode: DataMode = DataMode.RANDOM_DESIGN
    methods: list = field(default_factory=lambda: [m.value for m in CONCRETE_METHODS])
    ridge: float = 0.0
    rep_budget_s: float = 0.25
    reduce_factor: int = 4
    flop_rate: float = 2e9
    warmup: bool = True

    def __post_init__(self):
        self.data_mode = DataMode(self.data_mode)
        self.methods = [UpdateMethod.parse(m) for m in self.methods]
        if any(m is UpdateMethod.AUTO for m in self.methods):
            raise ValueError("benchmark methods must be concrete (di, ism, wmi)")
        if not self.ks:
            raise ValueError("ks must not be empty")
        if not self.sizes:
            raise ValueError("sizes must not be empty")
        if not self.methods:
            raise ValueError("methods must not be empty")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if any(int(k) != k or k < 1 for k in self.ks):
            raise ValueError(f"ks must be positive integers, got {self.ks}")
        self.ks = [int(k) for k in self.ks]
        for s in self.matrix_sizes():
            for k in self.ks:
                if self.S - k <= s and self.ridge <= 0:
                    raise ValueError(
                        f"S={self.S} leaves N={self.S - k} <= s={s} for k={k}; "
                        "increase S or set a positive ridge"
                    )
                if k >= self.S:
                    raise ValueError(f"k={k} must be smaller than S={self.S}")

    def matrix_sizes(self):
        return [size_of(entry, self.data_mode) for entry in self.sizes]

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        out = asdict(self)
        out["data_mode"] = self.data_mode.value
        out["methods"] = [m.value for m in self.methods]
        return out


def size_of(entry, mode=DataMode.RANDOM_DESIGN):
    if isinstance(entry, (list, tuple)):
        d, n = entry
        return basis_size(int(d), int(n))
    if mode is DataMode.EMBEDDED:
        raise ValueError(f"EMBEDDED data needs [d, n] pairs in sizes, got {entry!r}")
    s = int(entry)
    if s != entry or s < 1:
        raise ValueError(f"matrix size must be a positive integer, got {entry!r}")
    return s


@dataclass
class BenchRecord:
    s: int
    k: int
    method: UpdateMethod
    reps: int
    mean_time_s: float
    median_time_s: float
    error_frobenius: float
    cond: float
    failure: Optional[str] = None

    @property
    def ok(self):
        return self.failure is None

    def csv_row(self):
        return [
            str(self.s),
            str(self.k),
            self.method.value,
            str(self.reps),
            *(f"{x:.9g}" for x in (self.mean_time_s, self.median_time_s, self.error_frobenius, self.cond)),
        ]


def gen_dataset(S, size, seed=0, mode=DataMode.RANDOM_DESIGN):
    """S rows of width s, deterministic in ``seed``.

    RANDOM_DESIGN draws i.i.d. standard normal entries. EMBEDDED draws S
    points uniformly on [-1, 1]^d and vectorizes them; ``size`` must then be
    a ``(d, n)`` pair.
    """
    mode = DataMode(mode)
    rng = np.random.default_rng(seed)
    if mode is DataMode.EMBEDDED:
        d, n = size
        basis = enumerate_basis(int(d), int(n))
        return vectorize_batch(rng.uniform(-1.0, 1.0, size=(S, basis.d)), basis)
    s = size_of(size, mode)
    return rng.standard_normal((S, s))


def condition_number(M):
    """``lambda_max / lambda_min`` of a symmetric matrix; inf when it is not positive definite."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ConditioningFailure("matrix has non-finite entries")
    w = np.linalg.eigvalsh(M)
    if not np.all(np.isfinite(w)):
        raise ConditioningFailure("non-finite eigenvalues")
    if w[0] <= 0:
        return float("inf")
    return float(w[-1] / w[0])


def frobenius_residual(M, M_inv):
    """``||I - M M_inv||_F``."""
    R = M @ M_inv
    R[np.diag_indices_from(R)] -= 1.0
    return float(np.linalg.norm(R))


@dataclass
class Cell:
    """Fitted inputs shared by all methods of one (s, k) cell."""

    s: int
    k: int
    M_raw: np.ndarray
    M_raw_inv: Optional[np.ndarray]
    X: np.ndarray
    M_updated: np.ndarray
    cond: float
    fit_failure: Optional[str] = None


def prepare_cell(data, k, ridge=0.0):
    S, s = data.shape
    N = S - k
    fitted, X = data[:N], data[N:]
    M = moment_matrix(fitted, ridge)
    cond = condition_number(M)
    M_raw = M * N
    try:
        M_raw_inv = _cholesky_inverse(M) / N
        failure = None
    except InvUpdateError as exc:
        M_raw_inv, failure = None, f"{type(exc).__name__}: {exc}"
    return Cell(s, k, M_raw, M_raw_inv, X, M_raw + X.T @ X, cond, failure)


def planned_reps(config, method, s, k):
    predicted = costmodel.flops(method, s, k) / config.flop_rate
    if predicted > config.rep_budget_s:
        return max(1, config.reps // config.reduce_factor)
    return config.reps


def time_kernel(cell, method, reps, warmup=True):
    method = UpdateMethod.parse(method)
    kwargs = {"M_raw": cell.M_raw} if method is UpdateMethod.DI else {"M_raw_inv": cell.M_raw_inv}
    if warmup:
        run_kernel(method, cell.X, **kwargs)
    times = []
    result = None
    for _ in range(reps):
        t0 = time.perf_counter()
        result = run_kernel(method, cell.X, **kwargs)
        times.append(time.perf_counter() - t0)
    return times, result


def run_prepared(config, cell, method):
    method = UpdateMethod.parse(method)
    reps = planned_reps(config, method, cell.s, cell.k)
    nan = float("nan")
    if method is not UpdateMethod.DI and cell.M_raw_inv is None:
        return BenchRecord(cell.s, cell.k, method, 0, nan, nan, nan, cell.cond, cell.fit_failure)
    try:
        times, result = time_kernel(cell, method, reps, config.warmup)
    except InvUpdateError as exc:
        return BenchRecord(cell.s, cell.k, method, 0, nan, nan, nan, cell.cond, f"{type(exc).__name__}: {exc}")
    return BenchRecord(
        s=cell.s,
        k=cell.k,
        method=method,
        reps=reps,
        mean_time_s=statistics.fmean(times),
        median_time_s=statistics.median(times),
        error_frobenius=frobenius_residual(cell.M_updated, result),
        cond=cell.cond,
    )


def run_cell(config, s, k, method, data=None):
    """One timed cell. ``data`` defaults to the config's dataset for size ``s``."""
    if data is None:
        entry = next(e for e in config.sizes if size_of(e, config.data_mode) == s)
        data = gen_dataset(config.S, entry, config.seed, config.data_mode)
    return run_prepared(config, prepare_cell(data, k, config.ridge), method)


def run_bench(config, progress=None):
    records = []
    for entry in config.sizes:
        data = gen_dataset(config.S, entry, config.seed, config.data_mode)
        for k in config.ks:
            cell = prepare_cell(data, k, config.ridge)
            for method in config.methods:
                rec = run_prepared(config, cell, method)
                if not rec.ok:
                    log.warning("cell s=%d k=%d %s failed: %s", rec.s, rec.k, method.value, rec.failure)
                if progress is not None:
                    progress(rec)
                records.append(rec)
    return records


def winners(records):
    """Map (s, k) to the method with the smallest median time among successful cells."""
    best = {}
    for rec in records:
        if not rec.ok:
            continue
        key = (rec.s, rec.k)
        if key not in best or rec.median_time_s < best[key].median_time_s:
            best[key] = rec
    return {key: rec.method for key, rec in best.items()}


def fastest_grid(config, progress=None):
    records = run_bench(config, progress)
    return records, winners(records)


def write_csv(records, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.csv_row())


def records_to_csv(records):
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(fh):
    out = []
    for row in csv.DictReader(fh):
        out.append(
            BenchRecord(
                s=int(row["s"]),
                k=int(row["k"]),
                method=UpdateMethod.parse(row["method"]),
                reps=int(row["reps"]),
                mean_time_s=float(row["mean_time_s"]),
                median_time_s=float(row["median_time_s"]),
                error_frobenius=float(row["error_frobenius"]),
                cond=float(row["cond"]),
            )
        )
    return out


METHOD_COLORS = {UpdateMethod.ISM: "#2ca02c", UpdateMethod.WMI: "#1f77b4", UpdateMethod.DI: "#d62728"}


def winner_svg(winner_map, cell=28):
    """Static SVG heatmap: one column per s, one row per k, colored by winner."""
    sizes = sorted({s for s, _ in winner_map})
    ks = sorted({k for _, k in winner_map})
    left, top = 70, 20
    width = left + cell * len(sizes) + 110
    height = top + cell * len(ks) + 50
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        'font-family="sans-serif" font-size="11">'
    ]
    for j, k in enumerate(reversed(ks)):
        y = top + j * cell
        out.append(f'<text x="{left - 6}" y="{y + cell * 0.65:.1f}" text-anchor="end">{k}</text>')
        for i, s in enumerate(sizes):
            method = winner_map.get((s, k))
            color = METHOD_COLORS.get(method, "#dddddd")
            label = method.value if method else "n/a"
            out.append(
                f'<rect x="{left + i * cell}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{color}" stroke="white"><title>s={s} k={k}: {label}</title></rect>'
            )
    base = top + len(ks) * cell
    for i, s in enumerate(sizes):
        out.append(f'<text x="{left + (i + 0.5) * cell:.1f}" y="{base + 14}" text-anchor="middle">{s}</text>')
    out.append(f'<text x="{left + len(sizes) * cell / 2:.1f}" y="{base + 34}" text-anchor="middle">s</text>')
    out.append(f'<text x="14" y="{top + len(ks) * cell / 2:.1f}" text-anchor="middle">k</text>')
    lx = left + len(sizes) * cell + 16
    for j, (method, color) in enumerate(METHOD_COLORS.items()):
        out.append(f'<rect x="{lx}" y="{top + j * 20}" width="14" height="14" fill="{color}"/>')
        out.append(f'<text x="{lx + 20}" y="{top + j * 20 + 11}">{method.value.upper()}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

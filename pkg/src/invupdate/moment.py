"""Empirical moment matrix, its inverse, and the streaming update protocol.

The state keeps the *normalized* inverse ``M_n(mu_N)^-1``. An update
denormalizes it (divide by N), runs one of the rank-k kernels on the raw
inverse, then renormalizes by the new count N + k.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .basis import MonomialBasis, enumerate_basis, vectorize_batch
from .costmodel import UpdateMethod
from .errors import EmptyBatch, EmptyState, MissingMatrix, RankDeficient, ShapeError
from .update import SelectionRule, di_update, ism_update, select_method, spd_invert, wmi_update

SYMMETRY_RTOL = 1e-10


@dataclass
class MomentState:
    """Streaming summary of a point cloud.

    ``basis`` may be None when the state was fitted directly from design rows
    (the benchmark does this). ``matrix_normalized`` is only kept when
    ``track_matrix`` was requested, since only direct-inversion updates need it.
    ``ridge`` is added as ``ridge * I`` at fit time; in raw (denormalized) form
    it is ``N * ridge * I`` and stays fixed, so its weight decays as N grows.
    """

    basis: Optional[MonomialBasis]
    n_samples: int
    inv_normalized: np.ndarray
    matrix_normalized: Optional[np.ndarray] = None
    ridge: float = 0.0
    rounds: int = 0
    resymmetrize_every: Optional[int] = None

    @property
    def s(self) -> int:
        return self.inv_normalized.shape[0]

    @property
    def track_matrix(self) -> bool:
        return self.matrix_normalized is not None

    def copy(self):
        return replace(
            self,
            inv_normalized=self.inv_normalized.copy(),
            matrix_normalized=None if self.matrix_normalized is None else self.matrix_normalized.copy(),
        )


def design_matrix(points, basis):
    return vectorize_batch(points, basis)


def fit(points, basis: MonomialBasis, ridge=0.0, track_matrix=False, ledger=None, **kwargs):
    """Fit the moment matrix of ``points`` (shape (N, d)) in ``basis``."""
    V = vectorize_batch(points, basis)
    return fit_design(V, ridge=ridge, track_matrix=track_matrix, basis=basis, ledger=ledger, **kwargs)


def fit_design(V, ridge=0.0, track_matrix=False, basis=None, ledger=None, resymmetrize_every=None):
    """Fit from an (N, s) design matrix whose rows are already vectorized."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise ShapeError(f"design matrix must be 2-D, got shape {V.shape}")
    N, s = V.shape
    if basis is not None and basis.size != s:
        raise ShapeError(f"design has {s} columns but the basis has {basis.size} monomials")
    if ridge < 0:
        raise ValueError(f"ridge must be non-negative, got {ridge}")
    if N == 0:
        raise EmptyState("cannot fit a moment matrix on zero points")
    if N <= s and ridge == 0:
        raise RankDeficient(f"need more than {s} points for an invertible moment matrix, got {N}")
    M = moment_matrix(V, ridge)
    inv = spd_invert(M, ledger, check=False)
    return MomentState(
        basis=basis,
        n_samples=N,
        inv_normalized=inv,
        matrix_normalized=M if track_matrix else None,
        ridge=float(ridge),
        resymmetrize_every=resymmetrize_every,
    )


def moment_matrix(V, ridge=0.0):
    """``(1/N) V^T V + ridge I``."""
    N, s = V.shape
    M = (V.T @ V) / N
    if ridge:
        M[np.diag_indices(s)] += ridge
    return M


def denormalize(state: MomentState):
    """Raw sums ``(N M, M^-1 / N)``; the first item is None unless the matrix is tracked."""
    N = state.n_samples
    if N <= 0:
        raise EmptyState("state holds no samples")
    M_raw = None if state.matrix_normalized is None else state.matrix_normalized * N
    return M_raw, state.inv_normalized / N


def renormalize(M_updated_inv, N, k):
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    M_updated_inv = np.asarray(M_updated_inv, dtype=float)
    if M_updated_inv.ndim != 2 or M_updated_inv.shape[0] != M_updated_inv.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M_updated_inv.shape}")
    return M_updated_inv * (N + k)


def resolve_method(method, s, k, rule=SelectionRule.EXPERIMENTAL):
    method = UpdateMethod.parse(method)
    if method is UpdateMethod.AUTO:
        return select_method(s, k, rule)
    return method


def apply_update(state: MomentState, batch, method=UpdateMethod.AUTO, rule=SelectionRule.EXPERIMENTAL, ledger=None):
    """Integrate the rows of ``batch`` (a (k, s) design matrix) into a new state.

    Only the kernel step is charged to ``ledger``.
    """
    X = np.asarray(batch, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyBatch("update batch must contain at least one row")
    k, cols = X.shape
    if cols != state.s:
        raise ShapeError(f"batch has {cols} columns, state has size {state.s}")
    method = resolve_method(method, state.s, k, rule)
    if method is UpdateMethod.DI and state.matrix_normalized is None:
        raise MissingMatrix("direct inversion needs a state fitted with track_matrix=True")

    N = state.n_samples
    M_raw, M_raw_inv = denormalize(state)
    if method is UpdateMethod.DI:
        M_updated, inv_raw = di_update(M_raw, X, ledger, return_matrix=True)
    elif method is UpdateMethod.ISM:
        inv_raw = ism_update(M_raw_inv, X, ledger)
    else:
        inv_raw = wmi_update(M_raw_inv, X, ledger)
    if M_raw is not None and method is not UpdateMethod.DI:
        M_updated = M_raw + X.T @ X

    inv = renormalize(inv_raw, N, k)
    rounds = state.rounds + 1
    T = state.resymmetrize_every
    if T and rounds % T == 0:
        inv = 0.5 * (inv + inv.T)
    return replace(
        state,
        n_samples=N + k,
        inv_normalized=inv,
        matrix_normalized=None if M_raw is None else M_updated / (N + k),
        rounds=rounds,
    )


def update_with_points(state, points, method=UpdateMethod.AUTO, rule=SelectionRule.EXPERIMENTAL, ledger=None):
    if state.basis is None:
        raise ValueError("state has no basis; pass design rows to apply_update instead")
    return apply_update(state, vectorize_batch(points, state.basis), method, rule, ledger)


def symmetry_error(state):
    inv = state.inv_normalized
    return float(np.linalg.norm(inv - inv.T) / np.linalg.norm(inv))


def consistency_error(state):
    """``||I - M M^-1||_F`` for a state that tracks its matrix."""
    if state.matrix_normalized is None:
        raise MissingMatrix("state does not track its moment matrix")
    return float(np.linalg.norm(np.eye(state.s) - state.matrix_normalized @ state.inv_normalized))


def check_state(state, consistency_tol=1e-6):
    if state.n_samples <= state.s and state.ridge == 0:
        raise RankDeficient(f"N={state.n_samples} <= s={state.s} without ridge")
    if symmetry_error(state) > SYMMETRY_RTOL:
        raise ShapeError("inverse moment matrix is not symmetric")
    if state.matrix_normalized is not None and consistency_error(state) > consistency_tol:
        raise ValueError("moment matrix and its inverse are inconsistent")


# snapshot persistence: fixed little-endian header followed by raw float64 data

SNAPSHOT_MAGIC = b"MOMSNAP\0"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<8sIIIqqdqB")


def dumps_snapshot(state: MomentState) -> bytes:
    d, n = (0, 0) if state.basis is None else (state.basis.d, state.basis.n)
    has_matrix = state.matrix_normalized is not None
    header = _HEADER.pack(
        SNAPSHOT_MAGIC,
        SNAPSHOT_VERSION,
        d,
        n,
        state.n_samples,
        state.s,
        state.ridge,
        state.rounds,
        int(has_matrix),
    )
    parts = [header, np.ascontiguousarray(state.inv_normalized, dtype="<f8").tobytes()]
    if has_matrix:
        parts.append(np.ascontiguousarray(state.matrix_normalized, dtype="<f8").tobytes())
    return b"".join(parts)


def loads_snapshot(data: bytes) -> MomentState:
    if len(data) < _HEADER.size:
        raise ValueError("snapshot is truncated")
    magic, version, d, n, N, s, ridge, rounds, has_matrix = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError("not a moment-state snapshot")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    expected = _HEADER.size + 8 * s * s * (1 + has_matrix)
    if len(data) != expected:
        raise ValueError(f"snapshot has {len(data)} bytes, expected {expected}")
    basis = None
    if d:
        basis = enumerate_basis(d, n)
        if basis.size != s:
            raise ValueError(f"snapshot size {s} does not match basis ({d}, {n})")
    offset = _HEADER.size
    inv = np.frombuffer(data, dtype="<f8", count=s * s, offset=offset).reshape(s, s).astype(float)
    matrix = None
    if has_matrix:
        offset += 8 * s * s
        matrix = np.frombuffer(data, dtype="<f8", count=s * s, offset=offset).reshape(s, s).astype(float)
    return MomentState(basis, N, inv, matrix, ridge, rounds)


def save_snapshot(state, path):
    Path(path).write_bytes(dumps_snapshot(state))


def load_snapshot(path):
    return loads_snapshot(Path(path).read_bytes())

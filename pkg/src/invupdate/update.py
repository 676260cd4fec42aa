"""Rank-k inverse update kernels.

Three interchangeable ways to get ``(M + X^T X)^{-1}`` for an SPD matrix ``M``
and a (k, s) design matrix ``X``:

* :func:`di_update` rebuilds the sum and inverts it through Cholesky,
* :func:`ism_update` applies k Sherman-Morrison rank-1 corrections,
* :func:`wmi_update` applies one Woodbury correction with a k x k inner solve.

Every kernel takes an optional :class:`FlopLedger` and charges it the number
of floating-point operations of the algorithm it runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import blas, lapack

from . import costmodel
from .costmodel import UpdateMethod
from .errors import NotPositiveDefinite, ShapeError, SingularUpdate

__all__ = [
    "FlopLedger",
    "SelectionRule",
    "UpdateMethod",
    "di_update",
    "ism_update",
    "run_kernel",
    "select_method",
    "spd_invert",
    "wmi_update",
]

SYMMETRY_RTOL = 1e-10
SM_DENOMINATOR_ATOL = 1e-12


@dataclass
class FlopLedger:
    count: int = 0

    def add(self, flops):
        self.count += int(flops)

    def reset(self):
        self.count = 0


class SelectionRule(enum.Enum):
    EXPERIMENTAL = "experimental"
    THEORETICAL = "theoretical"


def _charge(ledger, flops):
    if ledger is not None:
        ledger.add(flops)


def _as_square(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {A.shape}")
    return A


def _as_design(X, s):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != s:
        raise ShapeError(f"design matrix must have shape (k, {s}), got {X.shape}")
    return X


def _mirror_upper(A, block=128):
    """Copy the strict upper triangle onto the lower one, in place."""
    s = A.shape[0]
    for j in range(0, s, block):
        stop = min(j + block, s)
        A[stop:, j:stop] = A[j:stop, stop:].T
        diag = A[j:stop, j:stop]
        il = np.tril_indices(stop - j, -1)
        diag[il] = diag.T[il]
    return A


def _cholesky_inverse(A, overwrite=False):
    s = A.shape[0]
    if s == 0:
        return np.empty((0, 0))
    # A is symmetric, so its transpose is the same matrix in Fortran order
    # and LAPACK can work on it without a copy
    c, info = lapack.dpotrf(A.T, lower=1, clean=0, overwrite_a=int(overwrite))
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    inv, info = lapack.dpotri(c, lower=1, overwrite_c=1)
    if info > 0:
        raise NotPositiveDefinite(info - 1, f"singular Cholesky factor (pivot {info - 1})")
    # dpotri fills the lower triangle of a Fortran array, i.e. the upper
    # triangle of its C-ordered transpose
    return _mirror_upper(inv.T)


def spd_invert(A, ledger=None, check=True):
    """Inverse of a symmetric positive-definite matrix via Cholesky.

    The factor L is computed, inverted in place, and ``L^-T L^-1`` formed
    from its lower triangle; the ledger is charged ``s^3 + s^2 + s`` FLOPs.
    Only the lower triangle of ``A`` is read.
    """
    A = _as_square(A)
    if check:
        scale = np.linalg.norm(A)
        if np.linalg.norm(A - A.T) > SYMMETRY_RTOL * scale:
            raise ShapeError("matrix is not symmetric")
    inv = _cholesky_inverse(A)
    _charge(ledger, costmodel.spd_invert_flops(A.shape[0]))
    return inv


def di_update(M_raw, X, ledger=None, return_matrix=False):
    """``(M_raw + X^T X)^{-1}`` by forming the sum and inverting it.

    With ``return_matrix`` the updated matrix is returned as well, as a
    ``(matrix, inverse)`` pair.
    """
    M_raw = _as_square(M_raw, "M_raw")
    s = M_raw.shape[0]
    X = _as_design(X, s)
    k = X.shape[0]
    updated = M_raw + X.T @ X
    _charge(ledger, costmodel.di_kernel_flops(s, k))
    inv = _cholesky_inverse(updated, overwrite=not return_matrix)
    _charge(ledger, costmodel.spd_invert_flops(s))
    if return_matrix:
        return updated, inv
    return inv


def ism_update(M_inv, X, ledger=None):
    """Apply the rows of ``X`` one at a time with the Sherman-Morrison formula.

    Per row ``v``: ``l = M^-1 v``, ``d = 1 + v.l``, ``M^-1 -= (l/d) l^T``.
    Symmetry of ``M^-1`` means a single matrix-vector product per row.
    """
    M_inv = _as_square(M_inv, "M_inv")
    s = M_inv.shape[0]
    X = _as_design(X, s)
    out = np.array(M_inv, dtype=float, order="C", copy=True)
    step = costmodel.ism_kernel_flops(s, 1)
    for row, v in enumerate(X):
        l = out @ v
        d = 1.0 + v @ l
        if not abs(d) > SM_DENOMINATOR_ATOL:
            raise SingularUpdate(row, float(d))
        ld = l / d
        # out.T is Fortran-ordered, so ger updates ``out`` in place
        blas.dger(-1.0, l, ld, a=out.T, overwrite_a=1)
        _charge(ledger, step)
    return out


def wmi_update(M_inv, X, ledger=None):
    """Single Woodbury correction.

    ``R = X M^-1``, ``S = I_k + R X^T``, ``Q = R^T S^-1``, result ``M^-1 - Q R``.
    """
    M_inv = _as_square(M_inv, "M_inv")
    s = M_inv.shape[0]
    X = _as_design(X, s)
    k = X.shape[0]
    R = X @ M_inv
    S = np.eye(k) + R @ X.T
    _charge(ledger, costmodel.mat_mat(k, s, s) + costmodel.mat_mat(k, s, k) + k * k)
    S_inv = _cholesky_inverse(S, overwrite=True)
    _charge(ledger, costmodel.spd_invert_flops(k))
    Q = R.T @ S_inv
    out = M_inv - Q @ R
    _charge(ledger, costmodel.mat_mat(s, k, k) + costmodel.mat_mat(s, k, s) + s * s)
    return out


def select_method(s, k, rule=SelectionRule.EXPERIMENTAL):
    """Pick a concrete update method for a rank-k update of an s x s inverse.

    The experimental rule is ISM for k = 1, WMI up to floor(s/3), DI beyond.
    The theoretical rule takes the cheapest of the published FLOP formulas.
    """
    if s < 1 or k < 1:
        raise ValueError(f"need s >= 1 and k >= 1, got s={s}, k={k}")
    rule = SelectionRule(rule)
    if rule is SelectionRule.THEORETICAL:
        return costmodel.theoretical_best(s, k)
    if k == 1:
        return UpdateMethod.ISM
    if k <= s // 3:
        return UpdateMethod.WMI
    return UpdateMethod.DI


def run_kernel(method, X, *, M_raw=None, M_raw_inv=None, ledger=None):
    """Dispatch to one concrete kernel; DI needs ``M_raw``, the others ``M_raw_inv``."""
    method = UpdateMethod.parse(method)
    if method is UpdateMethod.DI:
        return di_update(M_raw, X, ledger)
    if method is UpdateMethod.ISM:
        return ism_update(M_raw_inv, X, ledger)
    if method is UpdateMethod.WMI:
        return wmi_update(M_raw_inv, X, ledger)
    raise ValueError("AUTO must be resolved with select_method before running a kernel")

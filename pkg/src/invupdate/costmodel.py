"""Closed-form FLOP counts for the three update strategies and their crossovers.

Counting convention: one scalar add, multiply, divide or square root is one
FLOP. The O(5/6 s^3) inversion term of the published cost formulas is taken
literally here; the instrumented kernels in :mod:`invupdate.update` report
what they actually perform (see :func:`spd_invert_flops`).
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.optimize import bisect

INVERSION_CONSTANT = 5.0 / 6.0
EMPIRICAL_WMI_DIVISOR = 3.7506


class UpdateMethod(enum.Enum):
    DI = "di"
    ISM = "ism"
    WMI = "wmi"
    AUTO = "auto"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown update method {value!r}") from None


CONCRETE_METHODS = (UpdateMethod.DI, UpdateMethod.ISM, UpdateMethod.WMI)


# elementary products, exact integer counts

def row_col(p):
    """(1 x p) times (p x 1): p mults, p-1 adds."""
    return 2 * p - 1


def col_row(p, q):
    """(p x 1) times (1 x q) outer product."""
    return p * q


def rowvec_mat(p, q):
    """(1 x p) times (p x q)."""
    return 2 * p * q - q


def mat_colvec(p, q):
    """(p x q) times (q x 1)."""
    return 2 * p * q - p


def mat_mat(p, m, q):
    """(p x m) times (m x q)."""
    return 2 * p * q * m - p * q


# exact counts of the Cholesky-based inversion the kernels run

def cholesky_flops(s):
    return (2 * s**3 + 3 * s**2 + s) // 6


def triangular_inverse_flops(s):
    return (s**3 + 2 * s) // 3


def lower_gram_flops(s):
    """Lower triangle of W^T W for lower-triangular W."""
    return (2 * s**3 + 3 * s**2 + s) // 6


def spd_invert_flops(s):
    """Factor, invert the triangle, multiply back: s^3 + s^2 + s in total."""
    return cholesky_flops(s) + triangular_inverse_flops(s) + lower_gram_flops(s)


# kernel counts without the inner inversion (these are exact)

def di_kernel_flops(s, k):
    return mat_mat(s, k, s) + s * s


def ism_kernel_flops(s, k):
    step = mat_colvec(s, s) + row_col(s) + 1 + s + 2 * s * s
    return k * step


def wmi_kernel_flops(s, k):
    return (
        mat_mat(k, s, s)          # R = X M^-1
        + mat_mat(k, s, k)        # R X^T
        + k * k                   # + I_k
        + mat_mat(s, k, k)        # Q = R^T S^-1
        + mat_mat(s, k, s)        # Q R
        + s * s                   # M^-1 - Q R
    )


# published cost formulas

def flops_di(s, k):
    return INVERSION_CONSTANT * s**3 + 2 * k * s**2


def flops_ism(s, k):
    return 4 * k * s**2 + 2 * k * s


def flops_wmi(s, k):
    return 4 * k * s**2 + (4 * k**2 - 2 * k) * s + INVERSION_CONSTANT * k**3


def flops(method, s, k):
    method = UpdateMethod.parse(method)
    return {
        UpdateMethod.DI: flops_di,
        UpdateMethod.ISM: flops_ism,
        UpdateMethod.WMI: flops_wmi,
    }[method](s, k)


def threshold_di_over_ism(s):
    """DI is cheaper than ISM once k exceeds 5 s^2 / (12 (s + 1))."""
    return 5.0 * s**2 / (12.0 * (s + 1))


def di_wmi_cubic(k, s):
    """Positive exactly when DI is cheaper than WMI."""
    return (
        INVERSION_CONSTANT * k**3
        + 4.0 * s * k**2
        + 2.0 * (s**2 - s) * k
        - INVERSION_CONSTANT * s**3
    )


def threshold_di_over_wmi(s, xtol=1e-6):
    """Positive root in k of :func:`di_wmi_cubic`, bracketed on [0, s]."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    s = float(s)
    # the cubic is -5/6 s^3 at k=0 and 6 s^3 - 2 s^2 > 0 at k=s
    return bisect(di_wmi_cubic, 0.0, s, args=(s,), xtol=xtol, rtol=4 * np.finfo(float).eps)


def empirical_threshold_di_over_wmi(s):
    return s / EMPIRICAL_WMI_DIVISOR


def rule_boundary(s):
    """Largest k for which the practical rule still picks WMI (floor(s/3))."""
    return int(s) // 3


def fitted_wmi_divisor(sizes):
    """Least-squares c in k*(s) ~ s / c over the given sizes."""
    sizes = np.asarray(sizes, dtype=float)
    roots = np.array([threshold_di_over_wmi(s) for s in sizes])
    return float(sizes @ sizes / (sizes @ roots))


def fitted_ism_divisor(sizes):
    sizes = np.asarray(sizes, dtype=float)
    roots = threshold_di_over_ism(sizes)
    return float(sizes @ sizes / (sizes @ roots))


_TIE_ORDER = (UpdateMethod.WMI, UpdateMethod.ISM, UpdateMethod.DI)


def theoretical_best(s, k):
    """Method with the fewest predicted FLOPs; ties go to WMI, then ISM, then DI."""
    costs = {m: flops(m, s, k) for m in _TIE_ORDER}
    best = min(costs.values())
    return next(m for m in _TIE_ORDER if costs[m] == best)

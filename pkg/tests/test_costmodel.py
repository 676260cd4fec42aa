import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from invupdate import costmodel as cm
from invupdate.costmodel import UpdateMethod


def test_elementary_costs():
    assert cm.row_col(3) == 5
    assert cm.mat_mat(2, 2, 2) == 12
    for p in (1, 4, 9):
        assert cm.mat_colvec(p, p) == 2 * p * p - p
        assert cm.rowvec_mat(p, p) == 2 * p * p - p
    assert cm.col_row(3, 4) == 12


def _count_matmul(p, m, q):
    # p*q entries, each m mults and m-1 adds
    return sum(m + (m - 1) for _ in range(p * q))


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))
def test_mat_mat_matches_count(p, m, q):
    assert cm.mat_mat(p, m, q) == _count_matmul(p, m, q)


def test_published_formulas():
    assert cm.flops_ism(10, 3) == 1260
    s = 57
    assert cm.flops_wmi(s, 1) == pytest.approx(4 * s * s + 2 * s + 5 / 6)
    assert cm.flops_wmi(s, 1) - cm.flops_ism(s, 1) == pytest.approx(5 / 6)
    assert cm.flops_di(4, 2) == pytest.approx(5 / 6 * 64 + 64)


def test_di_cheaper_only_past_the_ism_threshold():
    # 500 < 535.834, so ISM is still nominally cheaper at k=500
    assert cm.flops_di(1287, 500) > cm.flops_ism(1287, 500)
    assert cm.flops_di(1287, 536) < cm.flops_ism(1287, 536)


def test_kernel_counts_match_published_parts():
    for s, k in [(1, 1), (10, 3), (37, 5), (100, 40)]:
        assert cm.ism_kernel_flops(s, k) == 4 * k * s * s + 2 * k * s
        assert cm.wmi_kernel_flops(s, k) == 4 * k * s * s + (4 * k * k - 2 * k) * s
        assert cm.di_kernel_flops(s, k) == 2 * k * s * s


def test_spd_invert_constant():
    for s in (100, 200, 400):
        c_inv = cm.spd_invert_flops(s) / s**3
        assert 0.5 <= c_inv <= 1.2
    assert cm.spd_invert_flops(7) == 7**3 + 7**2 + 7


def test_threshold_di_over_ism():
    assert cm.threshold_di_over_ism(1287) == pytest.approx(535.834, abs=1e-3)
    assert cm.threshold_di_over_ism(1) == pytest.approx(5 / 24)
    for s in (1000, 5000, 100000):
        assert cm.threshold_di_over_ism(s) / s == pytest.approx(5 / 12, rel=0.01)


@pytest.mark.parametrize("s", [50, 500, 1287])
def test_ism_threshold_is_the_crossover(s):
    t = cm.threshold_di_over_ism(s)
    above = math.ceil(t) + 1
    below = math.floor(t)
    assert cm.flops_di(s, above) < cm.flops_ism(s, above)
    assert cm.flops_di(s, below) > cm.flops_ism(s, below)


def _cubic_root_oracle(s):
    roots = np.roots([5 / 6, 4 * s, 2 * (s * s - s), -5 / 6 * s**3])
    real = [r.real for r in roots if abs(r.imag) < 1e-9 * s and r.real > 0]
    assert len(real) == 1
    return real[0]


def test_threshold_di_over_wmi_paper_value():
    k = cm.threshold_di_over_wmi(1287)
    assert k == pytest.approx(343.250, abs=0.5)
    assert abs(k - 1287 / 3.7506) <= 0.5
    assert k == pytest.approx(_cubic_root_oracle(1287), abs=1e-5)


@pytest.mark.parametrize("s", [1, 2, 10, 100, 1287, 10000])
def test_cubic_root_plugs_back(s):
    k = cm.threshold_di_over_wmi(s)
    assert 0 < k < s
    assert k == pytest.approx(_cubic_root_oracle(s), abs=1e-5)
    # derivative is ~2 s^2 near the root, so |f(k*)| <= 2 s^2 * xtol
    assert abs(cm.di_wmi_cubic(k, s)) <= 1e-3 * s**3 * 1e-6 + 4 * s * s * 1e-6


def test_cubic_root_monotone():
    for s in (100, 500, 1000):
        assert cm.threshold_di_over_wmi(2 * s) > cm.threshold_di_over_wmi(s)


def test_empirical_threshold():
    assert cm.empirical_threshold_di_over_wmi(1287) == pytest.approx(343.145, abs=1e-3)
    assert cm.empirical_threshold_di_over_wmi(3.7506) == pytest.approx(1.0)
    for s in np.linspace(100, 10000, 25):
        assert cm.empirical_threshold_di_over_wmi(s) == pytest.approx(cm.threshold_di_over_wmi(s), rel=0.01)


def test_fitted_divisors_near_published_constants():
    sizes = np.arange(1, 10001, 37)
    assert cm.fitted_wmi_divisor(sizes) == pytest.approx(3.7506, rel=2e-3)
    assert cm.fitted_ism_divisor(sizes) == pytest.approx(2.4002, rel=2e-3)


def test_theoretical_best():
    assert cm.theoretical_best(1287, 600) is UpdateMethod.DI
    assert cm.theoretical_best(1287, 1) is UpdateMethod.ISM
    # the WMI formula exceeds the ISM one by (4k^2 - 4k)s + 5/6 k^3 >= 0
    assert cm.theoretical_best(1287, 100) is UpdateMethod.ISM


@given(st.integers(1, 3000), st.integers(1, 3000))
def test_theoretical_best_is_argmin(s, k):
    best = cm.theoretical_best(s, k)
    costs = {m: cm.flops(m, s, k) for m in cm.CONCRETE_METHODS}
    assert costs[best] == min(costs.values())
    assert cm.flops_wmi(s, k) >= cm.flops_ism(s, k)

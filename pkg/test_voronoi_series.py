"""Tests for the truncated Voronoi-type series."""

import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from arith_core import PanelIntegrator, delta_k
from error_logger import CapacityError, DomainError, UnsupportedError, UsageError
from models import SeriesVariant
from voronoi_series import (JUMP_REACH, TAPER_START, first_derivative_scan,
                            first_derivative_test_check, fit_c1, integral_series_parts,
                            jump_correction, jump_reach, jump_response, reduced_phase,
                            sign_change_count, taper_weight, voronoi_delta3, voronoi_delta_k,
                            voronoi_integral_delta, voronoi_tail_bound)


def _circular_gap(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


@pytest.mark.parametrize("k,scale", [(2, 2.0), (3, 3.0), (5, 5.0)])
def test_reduced_phase_against_mpmath(k, scale):
    n = np.array([1, 17, 99_991, 10 ** 6, 123_456_789], dtype=np.int64)
    x = 98_765.4321
    phases = reduced_phase(n, x, k, scale)
    with mpmath.workdps(50):
        for ni, f in zip(n, phases):
            value = scale * mpmath.root(mpmath.mpf(int(ni)) * mpmath.mpf(x), k)
            exact = float(value - mpmath.floor(value))
            assert 0.0 <= f < 1.0
            assert _circular_gap(f, exact) <= 1e-13


def test_tail_bound():
    assert voronoi_tail_bound(1.25, 10 ** 5) > voronoi_tail_bound(1.25, 10 ** 6)
    with pytest.raises(DomainError):
        voronoi_tail_bound(1.0, 100)


def test_delta3_is_general_series_at_k3(table3):
    delta3 = voronoi_delta3(table3, 150.0, 100.0, 10 ** 4)
    general = voronoi_delta_k(table3, 150.0, 10 ** 4, 3)
    assert delta3.value == general.value
    assert delta3.heuristic and general.heuristic
    assert delta3.spec.variant == SeriesVariant.DELTA3


def test_delta3_window_and_capacity(table3):
    with pytest.raises(UsageError):
        voronoi_delta3(table3, 250.0, 100.0)
    with pytest.raises(CapacityError):
        voronoi_delta3(table3, 300.0, 200.0)


def test_general_series_k2_within_budget(table2, model2):
    x = 5000.5
    value = voronoi_delta_k(table2, x, table2.limit, 2, delta_k(table2, model2, x))
    assert value.abs_err <= value.tail_bound
    assert value.to_row()["abs_err"] == value.abs_err


def test_general_series_rejects_k1(table2):
    with pytest.raises(UnsupportedError):
        voronoi_delta_k(table2, 100.0, 100, 1)


def test_integral_series_tracks_exact_increments(table2, integrator2):
    M = table2.limit
    x1, x2 = 1000.0, 5000.0
    series = (voronoi_integral_delta(table2, x2, M).value
              - voronoi_integral_delta(table2, x1, M).value)
    exact = integrator2.integral_between(x1, x2, "I1")
    assert abs(series - exact) <= 0.03


def test_sharp_truncation_misses_the_jump_terms(table2, integrator2):
    # At integer x a sharp cut leaves about -d(x) sqrt(x) / (2 pi^2 sqrt(M)).
    M = table2.limit
    x1, x2 = 1000.0, 5000.0
    sharp = (sum(integral_series_parts(table2, x2, M, tapered=False))
             - sum(integral_series_parts(table2, x1, M, tapered=False)))
    exact = integrator2.integral_between(x1, x2, "I1")
    d1, d2 = table2.values[999], table2.values[4999]
    expected = -(d2 * math.sqrt(x2) - d1 * math.sqrt(x1)) / (2 * math.pi ** 2 * math.sqrt(M))
    assert (d1, d2) == (16, 20)
    assert exact - sharp == pytest.approx(expected, rel=0.25)


def test_taper_weight():
    np.testing.assert_allclose(taper_weight([0.0, 0.3, TAPER_START, 1.0, 1.5]),
                               [1.0, 1.0, 1.0, 0.0, 0.0])
    assert taper_weight(0.75) == pytest.approx(0.5)


def test_jump_response_against_quadrature():
    one_minus_w = lambda w: (1.0 - taper_weight(w)) / w ** 2
    for z in (0.0, 0.7, 3.0, 11.5):
        inner = integrate.quad(lambda w: one_minus_w(w) * math.cos(w * z), TAPER_START, 1.0,
                               epsabs=0.0, epsrel=1e-12)[0]
        if z == 0.0:
            outer = 1.0
        else:
            outer = integrate.quad(lambda w: w ** -2.0, 1.0, np.inf, weight="cos", wvar=z)[0]
        assert jump_response(z) == pytest.approx(-(inner + outer) / math.pi, abs=1e-7)
    assert jump_response(-3.0) == jump_response(3.0)
    assert abs(jump_response(JUMP_REACH)) < 1e-4


def test_jump_correction_vanishes_between_far_jumps(table2):
    # a = 2 pi sqrt(M / x) = 20 pi puts every jump at least 10 pi from x.
    assert abs(jump_correction(table2, 1000.5, 100_000)) < 1e-3
    assert jump_correction(table2, 1000.0, 100_000) < -0.05
    with pytest.raises(CapacityError):
        jump_correction(table2, float(table2.limit), 10)
    assert jump_reach(1000.0, 100_000) == pytest.approx(JUMP_REACH / (20.0 * math.pi))
    x = table2.limit - 2 * jump_reach(table2.limit, 1000)
    assert math.isfinite(jump_correction(table2, x, 1000))


def test_fit_c1_is_stable_along_the_grid(table2, model2):
    c1, spread = fit_c1(table2, model2, [1000.0, 1733.5, 2500.0, 4000.0, 5000.0], table2.limit)
    assert math.isfinite(c1)
    assert spread <= 0.03


def test_integral_series_reports_rigorous_tail(table2):
    value = voronoi_integral_delta(table2, 2000.0, 1000)
    assert not value.heuristic
    assert value.tail_bound > 0
    with pytest.raises(CapacityError):
        voronoi_integral_delta(table2, 2000.0, table2.limit + 1)


def test_sign_changes(table2):
    xs = np.linspace(1000.0, 2000.0, 200)
    assert sign_change_count(table2, xs, 2000) > 10


def test_first_derivative_check(table3, model3):
    lhs, rhs = first_derivative_test_check(table3, model3, 100.0)
    assert lhs >= 0.0
    assert rhs == pytest.approx(100.0 ** 1.1)
    with pytest.raises(CapacityError):
        first_derivative_test_check(table3, model3, 200.0)


def test_first_derivative_check_needs_k3(table2, model2):
    with pytest.raises(DomainError):
        first_derivative_test_check(table2, model2, 100.0)


def test_first_derivative_scan(table3, model3):
    frame, constant, slope = first_derivative_scan(table3, model3, [20.0, 40.0, 80.0, 140.0])
    assert list(frame.columns) == ["X", "lhs", "lhs_over_X", "rhs"]
    assert (frame["lhs"] <= frame["rhs"] * (1 + 1e-12)).all()
    assert math.isfinite(slope)

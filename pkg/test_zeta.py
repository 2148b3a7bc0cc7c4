"""Tests for the Euler-Maclaurin zeta evaluator."""

import math

import mpmath
import numpy as np
import pytest

from error_logger import CeilingError, PoleError
from zeta import zeta_eta_oracle, zeta_eval, zeta_values


def test_even_values():
    assert abs(zeta_eval(2.0).value - math.pi ** 2 / 6) <= 1e-12
    assert abs(zeta_eval(4.0).value - math.pi ** 4 / 90) <= 1e-12


def test_three_halves():
    value = zeta_eval(1.5)
    assert value.value.real == pytest.approx(2.612375348685488, abs=1e-12)
    assert value.err_budget < 1e-12


def test_budget_covers_error_off_the_axis():
    for s in (0.5 + 14.134725j, 2.0 + 100.0j, -1.5 + 3.0j):
        value = zeta_eval(s)
        reference = complex(mpmath.zeta(s))
        assert abs(value.value - reference) <= max(value.err_budget, 1e-14)


def test_vectorised_values_keep_shape():
    s = np.array([[2.0, 3.0], [0.5 + 1j, 1.5 - 20j]])
    values, bounds = zeta_values(s)
    assert values.shape == (2, 2)
    assert bounds.shape == (2, 2)
    for v, p in zip(values.ravel(), s.ravel()):
        assert abs(v - complex(mpmath.zeta(p))) <= 1e-12 * max(1.0, abs(v))


def test_matches_eta_series_oracle():
    rng = np.random.default_rng(20240601)
    sigma = rng.uniform(0.3, 3.0, 100)
    sigma = np.where(np.abs(sigma - 1.0) < 0.05, sigma + 0.1, sigma)
    s = sigma + 1j * rng.uniform(-50.0, 50.0, 100)
    values, _ = zeta_values(s)
    for v, p in zip(values, s):
        assert abs(v - zeta_eta_oracle(p)) <= 1e-10 * max(1.0, abs(v))


def test_pole_and_ceiling():
    with pytest.raises(PoleError):
        zeta_eval(1.0)
    with pytest.raises(CeilingError):
        zeta_values(2.0 + 2.0e4j)

"""Tests for Perron inversion, K_k(s), Parseval partial integrals and the Laplace transform."""

import math

import numpy as np
import pytest

from arith_core import sieve_dk
from asymptotics import A1, const_A_B
from error_logger import CapacityError, DomainError, PoleError, UnsupportedError
from mainterm import main_term_poly
from mellin import (fit_laplace_residual, laplace_check, laplace_cutoff, laplace_values,
                    make_integrator, mellin_K2_continued, mellin_K3_continued, mellin_K_direct,
                    mellin_continued, oscillatory_integral, parseval_bound, parseval_partial,
                    perron_delta, perron_kernel, pole_residue_estimate)
from models import MellinMethod


@pytest.fixture(scope="module")
def k2_integrator(table2, model2):
    return make_integrator(table2, model2)


@pytest.fixture(scope="module")
def k3_integrator(table3, model3):
    return make_integrator(table3, model3)


class TestPerron:

    @pytest.mark.parametrize("y,expected", [(2.0, 1.0), (1.0, 0.5), (0.5, 0.0)])
    def test_kernel(self, y, expected):
        assert perron_kernel(y, 0.9, 1.0e3) == pytest.approx(expected, abs=1e-3)

    def test_oscillatory_integral_closed_form(self):
        value, err = oscillatory_integral(lambda t: np.cos(3.0 * t), 50.0, 3.0)
        assert value == pytest.approx(math.sin(150.0) / 3.0, abs=1e-10)
        assert err < 1e-8

    def test_k2_at_ten_and_a_half(self, table2, model2):
        approx, exact = perron_delta(2, 10.5, 0.9, 1.0e3, table2, model2)
        assert exact == pytest.approx(27 - 10.5 * (math.log(10.5) + 2 * 0.5772156649015329 - 1) - 0.25)
        assert abs(approx - exact) <= 0.15

    def test_k1_recovers_zero(self):
        approx, exact = perron_delta(1, 10.5, 0.5, 1.0e3)
        assert exact == pytest.approx(0.0, abs=1e-12)
        assert abs(approx) <= 0.05

    def test_preconditions(self):
        with pytest.raises(DomainError):
            perron_delta(2, 10.0, 0.9, 100.0)
        with pytest.raises(DomainError):
            perron_delta(2, 10.5, 1.2, 100.0)
        with pytest.raises(DomainError):
            perron_delta(2, 10.5, 0.9, 5.0)
        with pytest.raises(DomainError):
            perron_delta(2, 1.5, 0.9, 100.0)


class TestMellin:

    def test_direct_matches_continued(self, k2_integrator):
        direct = mellin_K_direct(k2_integrator, 1.8)
        continued = mellin_continued(k2_integrator, 1.8)
        assert direct.method == MellinMethod.DIRECT
        assert continued.method == MellinMethod.CONTINUED_K2
        assert abs(direct.value - continued.value) <= 1e-7 * abs(continued.value)
        assert continued.truncation_budget > 0

    def test_raw_transform_budget_includes_closure(self, k2_integrator):
        closed = mellin_K_direct(k2_integrator, 2.0 + 1.0j)
        raw = mellin_K_direct(k2_integrator, 2.0 + 1.0j, tail_closure=False)
        assert raw.truncation_budget >= abs(closed.value - raw.value)

    def test_continuation_into_the_strip(self, k2_integrator):
        value = mellin_K2_continued(k2_integrator, 1.3)
        assert math.isfinite(value.value.real)
        with pytest.raises(DomainError):
            mellin_K_direct(k2_integrator, 1.3)

    def test_pole_and_strip_guards(self, k2_integrator, k3_integrator):
        with pytest.raises(PoleError):
            mellin_continued(k2_integrator, 1.5 + 1.0e-4)
        with pytest.raises(DomainError):
            mellin_continued(k2_integrator, 0.9)
        with pytest.raises(DomainError):
            mellin_continued(k3_integrator, 1.5)
        with pytest.raises(DomainError):
            mellin_K3_continued(k2_integrator, 1.8)

    def test_k2_residue(self, k2_integrator):
        estimate, expected = pole_residue_estimate(k2_integrator)
        A, _ = const_A_B()
        assert expected == pytest.approx(1.5 * A)
        assert estimate == pytest.approx(expected, rel=1e-2)

    def test_k3_residue_is_extrapolated(self, k3_integrator):
        estimate, expected = pole_residue_estimate(k3_integrator)
        plain, _ = pole_residue_estimate(k3_integrator, extrapolate=False)
        assert estimate == pytest.approx(expected, rel=1e-3)
        assert abs(estimate - expected) < abs(plain - expected)

    def test_k3_continuation(self, k3_integrator):
        value = mellin_K3_continued(k3_integrator, 1.9)
        assert value.method == MellinMethod.CONTINUED_K3
        assert math.isfinite(abs(value.value))

    def test_unsupported_order(self):
        integrator = make_integrator(sieve_dk(4, 500), main_term_poly(4))
        with pytest.raises(UnsupportedError):
            mellin_continued(integrator, 2.5)


class TestParseval:

    def test_partial_integrals_below_bound(self, table2, model2):
        integrator = make_integrator(table2, model2, 2000.0, s_abs=6.0)
        frame = parseval_partial(integrator, 1.8, 5.0)
        assert list(frame.columns) == ["T", "partial"]
        assert (np.diff(frame["partial"]) >= 0).all()
        assert frame["partial"].iloc[-1] <= parseval_bound(integrator, 1.8) * (1 + 1e-9)
        assert parseval_bound(integrator, 1.8, full=True) > parseval_bound(integrator, 1.8)

    def test_sigma_and_panel_guards(self, table2, model2):
        integrator = make_integrator(table2, model2, 2000.0)
        with pytest.raises(DomainError):
            parseval_partial(integrator, 1.5, 1.0)
        with pytest.raises(DomainError):
            parseval_partial(integrator, 1.8, 100.0)


class TestLaplace:

    def test_cutoff_controls_the_tail(self):
        T, leading = 100.0, 870.0
        cut = laplace_cutoff(T, leading)
        assert cut > 10 * T
        assert T * (cut + T) * math.exp(-cut / T) <= 1.01e-12 * leading

    def test_leading_term(self, table2, model2):
        frame = laplace_values(table2, model2, [100.0, 300.0])
        assert list(frame.columns) == ["T", "lhs", "leading", "residual", "ratio", "known",
                                       "known_ratio"]
        _, B = const_A_B()
        assert frame["leading"].iloc[1] == pytest.approx(B / 8.0 * (300.0 / math.pi) ** 1.5)
        assert frame["ratio"].between(0.7, 1.3).all()

    def test_known_terms(self, table2, model2):
        frame = laplace_values(table2, model2, [100.0, 300.0])
        T = frame["T"]
        assert np.allclose(frame["known"], frame["leading"] + A1 * T * np.log(T) ** 2)
        assert np.allclose(frame["known_ratio"], frame["lhs"] / frame["known"])
        assert (frame["known"] < frame["leading"]).all()

    def test_single_value(self, table2, model2):
        lhs, leading, residual = laplace_check(table2, model2, 100.0)
        assert residual == pytest.approx(lhs - leading)

    def test_cutoff_beyond_table(self, table2, model2):
        with pytest.raises(CapacityError):
            laplace_values(table2, model2, [1.0e3])

    def test_fit_recovers_coefficients(self):
        Ts = np.array([1.0e3, 1.0e4, 1.0e5])
        L = np.log(Ts)
        residuals = (A1 * L ** 2 + 0.3 * L - 1.2) * Ts
        a1, a2, a3 = fit_laplace_residual(Ts, residuals)
        assert a1 == pytest.approx(A1, rel=1e-8)
        assert a2 == pytest.approx(0.3, rel=1e-8)
        assert a3 == pytest.approx(-1.2, rel=1e-8)

"""Tests for Stieltjes constants, Laurent expansions and the main-term polynomial."""

import math

import mpmath
import numpy as np
import pytest

from error_logger import UnsupportedError
from mainterm import (LaurentSeries, laurent_mul, main_term_by_contour, main_term_poly,
                      residue_by_contour, stieltjes, zeta_laurent_pow, zeta_laurent_series)
from models import MainTermModel


EULER_GAMMA = 0.5772156649015329


class TestStieltjes:

    def test_known_values(self):
        table = stieltjes(2)
        assert table.kmax == 2
        assert table.gamma[0] == pytest.approx(EULER_GAMMA, abs=1e-15)
        assert table.gamma[1] == pytest.approx(-0.0728158454836767, abs=1e-15)
        assert table.gamma[2] == pytest.approx(-0.00969036319287, abs=1e-13)

    def test_against_mpmath(self):
        table = stieltjes(12)
        for n in range(13):
            reference = float(mpmath.stieltjes(n))
            assert abs(table.gamma[n] - reference) <= 1e-14 * max(1.0, abs(reference))
            assert table.err_budget[n] < 1e-20

    def test_range(self):
        with pytest.raises(UnsupportedError):
            stieltjes(13)

    def test_recompute_matches_stored(self, tmp_path):
        from sieve_cache import SieveCache
        stored = stieltjes(4)
        fresh = stieltjes(4, recompute=True, cache=SieveCache(tmp_path))
        assert fresh.gamma == stored.gamma
        assert (tmp_path / "stieltjes.json").exists()


class TestLaurent:

    def test_zeta_series(self):
        series = zeta_laurent_series(2)
        assert series.coefficient(-1) == 1.0
        assert series.coefficient(0) == pytest.approx(EULER_GAMMA)
        assert series.coefficient(1) == pytest.approx(0.0728158454836767)
        with pytest.raises(ValueError):
            series.coefficient(3)

    def test_square_principal_part(self):
        series = zeta_laurent_pow(2, -1)
        assert series.coefficient(-2) == pytest.approx(1.0)
        assert series.coefficient(-1) == pytest.approx(2 * EULER_GAMMA)

    def test_cube_principal_part(self):
        series = zeta_laurent_pow(3, 0)
        assert series.coefficient(-3) == pytest.approx(1.0)
        assert series.coefficient(-2) == pytest.approx(3 * EULER_GAMMA)

    def test_against_numerical_zeta(self):
        # zeta^2(s) - principal part is analytic; compare at s = 1 + u.
        u = 0.05
        series = zeta_laurent_pow(2, 6)
        approx = sum(series.coefficient(p) * u ** p for p in range(-2, 7))
        assert approx == pytest.approx(float(mpmath.zeta(1 + u)) ** 2, rel=1e-12)

    def test_truncated_product(self):
        a = LaurentSeries(-1, [1.0, 2.0, 3.0])
        b = LaurentSeries(0, [1.0, 1.0])
        product = laurent_mul(a, b, order=0)
        assert product.high == 0
        assert product.as_dict() == {-1: 1.0, 0: 3.0}

    def test_order_range(self):
        with pytest.raises(UnsupportedError):
            zeta_laurent_pow(2, 9)
        with pytest.raises(UnsupportedError):
            zeta_laurent_pow(2, -3)


class TestMainTerm:

    def test_k2_polynomial(self):
        model = main_term_poly(2)
        assert model.coeffs == pytest.approx([2 * EULER_GAMMA - 1, 1.0])
        assert model.zeta_k0 == 0.25

    def test_k3_leading_coefficient(self):
        model = main_term_poly(3)
        assert model.degree == 2
        assert model.coeffs[-1] == pytest.approx(0.5)
        assert model.zeta_k0 == -0.125

    @pytest.mark.parametrize("x", [math.e, 10.0])
    def test_k3_matches_contour_residue(self, x):
        model = main_term_poly(3)
        assert model.evaluate(x) == pytest.approx(main_term_by_contour(3, x), rel=1e-9)

    @pytest.mark.parametrize("k", [4, 6])
    def test_matches_contour_residue_at_random_points(self, k):
        model = main_term_poly(k)
        for x in np.random.default_rng(k).uniform(10.0, 1.0e4, 3):
            assert model.evaluate(x) == pytest.approx(main_term_by_contour(k, x), rel=1e-9)

    def test_range(self):
        with pytest.raises(UnsupportedError):
            main_term_poly(13)
        with pytest.raises(UnsupportedError):
            main_term_poly(0)

    def test_json_round_trip(self):
        model = main_term_poly(4)
        again = MainTermModel.from_dict(model.to_dict())
        assert again.coeffs == model.coeffs
        assert again.zeta_k0 == model.zeta_k0


def test_residue_by_contour_simple_pole():
    value = residue_by_contour(lambda s: 3.0 / (s - 2.0), 2.0, 0.5, nodes=64)
    assert value == pytest.approx(3.0)

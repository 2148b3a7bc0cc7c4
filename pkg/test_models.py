"""Tests for the data records and run configuration."""

from fractions import Fraction

import numpy as np
import pytest

from error_logger import UsageError
from models import (DivisorTable, ErrorTermProfile, ExponentLedger, MainTermModel, RunConfig,
                    SeriesSpec, SeriesVariant, StieltjesTable)


class TestDivisorTable:

    def test_values_are_read_only(self):
        table = DivisorTable(2, 4, np.array([1, 2, 2, 3]))
        assert table.values[3] == 3
        assert list(table.prefix) == [1, 3, 5, 8]
        with pytest.raises(ValueError):
            table.values[0] = 7

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            DivisorTable(2, 5, np.array([1, 2, 2, 3]))

    def test_equality(self):
        a = DivisorTable(2, 3, np.array([1, 2, 2]))
        assert a == DivisorTable(2, 3, np.array([1, 2, 2]))
        assert a != DivisorTable(3, 3, np.array([1, 2, 2]))


def test_stieltjes_laurent_coefficients():
    table = StieltjesTable(kmax=2, gamma=[0.5, 0.25, 0.125], err_budget=[0.0] * 3)
    np.testing.assert_allclose(table.laurent_coefficients(), [0.5, -0.25, 0.0625])
    restored = StieltjesTable.from_dict(table.to_dict())
    assert restored.gamma == table.gamma
    assert restored.truncated(1).gamma == [0.5, 0.25]


def test_main_term_model_evaluate():
    model = MainTermModel(k=2, coeffs=[-0.5, 1.0], zeta_k0=0.25)
    assert model.evaluate(np.e) == pytest.approx(np.e * 0.5)
    assert MainTermModel.from_dict(model.to_dict()) == model


def test_profile_frame_fills_missing_fourth_moment():
    grid = np.array([1.0, 2.0])
    profile = ErrorTermProfile(k=3, grid=grid, delta=grid, I1=grid, I2=grid)
    frame = profile.to_frame()
    assert list(frame.columns) == ErrorTermProfile.COLUMNS
    assert frame["I4"].isna().all()


def test_series_spec_window():
    SeriesSpec(k=3, x=150.0, truncation=10, variant=SeriesVariant.DELTA3, X=100.0).validate()
    with pytest.raises(UsageError):
        SeriesSpec(k=3, x=250.0, truncation=10, variant=SeriesVariant.DELTA3, X=100.0).validate()
    with pytest.raises(UsageError):
        SeriesSpec(k=2, x=10.0, truncation=0, variant=SeriesVariant.GENERAL).validate()
    with pytest.raises(UsageError):
        SeriesSpec(k=2, x=10.0, truncation=5, variant="CUBIC").validate()


def test_ledger_equality_flags():
    ledger = ExponentLedger({"beta": {2: Fraction(1, 4)}}, exact={"beta": {2: True}})
    assert ledger.is_equality("beta", 2)
    assert not ledger.is_equality("theta", 3)


class TestRunConfig:

    def test_string_overrides_are_coerced(self):
        config = RunConfig().update({"k": "3", "N": "1e6", "start": "10", "quick": "yes",
                                     "format": "json", "log-level": "DEBUG"})
        assert config.k == 3
        assert config.N == 1_000_000
        assert config.start == 10.0
        assert config.quick is True
        assert config.fmt == "json"
        assert config.log_level == "DEBUG"

    def test_bad_values(self):
        with pytest.raises(UsageError):
            RunConfig().update({"k": "three"})
        with pytest.raises(UsageError):
            RunConfig().update({"quick": "maybe"})
        with pytest.raises(UsageError):
            RunConfig().update({"colour": "blue"})

    def test_validation(self):
        with pytest.raises(UsageError):
            RunConfig(stop=1.0).validate()
        with pytest.raises(UsageError):
            RunConfig(threads=0).validate()
        with pytest.raises(UsageError):
            RunConfig(command="plot").validate()

    def test_hash_ignores_presentation_keys(self):
        base = RunConfig(command="delta")
        assert base.hash() == RunConfig(command="delta", threads=8, output="x.csv").hash()
        assert base.hash() != RunConfig(command="delta", k=3).hash()

    def test_grid(self):
        np.testing.assert_allclose(RunConfig(start=10, stop=1000, points=3).grid(), [10, 100, 1000])
        np.testing.assert_allclose(RunConfig(start=10, stop=30, points=3, spacing="linear").grid(),
                                   [10, 20, 30])
        assert list(RunConfig(points=1).grid()) == [1.0e4]

    def test_complex_s(self):
        assert RunConfig(s="2+3i").complex_s() == complex(2, 3)
        assert RunConfig(s="1.8").complex_s() == complex(1.8)
        with pytest.raises(UsageError):
            RunConfig().complex_s()
        with pytest.raises(UsageError):
            RunConfig(s="two").complex_s()

    def test_power_list(self):
        assert RunConfig(powers="1, 2,4").power_list() == [1, 2, 4]
        with pytest.raises(UsageError):
            RunConfig(powers="1,x").power_list()

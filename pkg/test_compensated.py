"""Tests for the error-free transformations and the ordered worker pool."""

import math

import numpy as np
import pytest

from compensated import (KahanAccumulator, chunk_bounds, compensated_cumsum, csum, fsum,
                         parallel_map, two_prod, two_sum)


def test_two_sum_recovers_rounding_error():
    s, e = two_sum(1.0e16, 1.0)
    assert s == 1.0e16
    assert e == 1.0


def test_two_prod_is_exact():
    a, b = 1.0 + 2.0 ** -30, 1.0 - 2.0 ** -30
    p, e = two_prod(a, b)
    assert p == 1.0
    assert e == -(2.0 ** -60)


def test_fsum_and_csum_cancel_exactly():
    assert fsum(np.array([1.0e16, 1.0, -1.0e16])) == 1.0
    assert csum(np.array([1.0e16 + 1j, 1.0 - 1.0e16j, -1.0e16 + 1.0e16j])) == complex(1.0, 1.0)


def test_kahan_accumulator_matches_fsum():
    rng = np.random.default_rng(7)
    values = rng.standard_normal(10_000) * 10.0 ** rng.integers(-8, 8, 10_000)
    acc = KahanAccumulator().extend(values)
    assert acc.value == pytest.approx(math.fsum(values), rel=1e-15, abs=1e-12)


def test_compensated_cumsum_tracks_exact_prefix_sums():
    rng = np.random.default_rng(11)
    values = rng.uniform(-1.0, 1.0, 20_000)
    out = compensated_cumsum(values, block=1024)
    for stop in (1, 1024, 5000, 20_000):
        assert out[stop - 1] == pytest.approx(math.fsum(values[:stop]), abs=1e-12)


def test_parallel_map_keeps_input_order():
    items = list(range(50))
    assert parallel_map(lambda v: v * v, items, workers=4) == [v * v for v in items]


def test_chunk_bounds_cover_range_without_overlap():
    bounds = chunk_bounds(3, 100, 16)
    assert bounds[0][0] == 3
    assert bounds[-1][1] == 100
    assert all(b[1] == c[0] for b, c in zip(bounds, bounds[1:]))

"""
Error-free transformations, compensated sums and the deterministic worker pool.

Every reduction in divlab goes through this module so that results do not
depend on how many workers produced the partial sums.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np


logger = logging.getLogger(__name__)

CUMSUM_BLOCK = 4096
_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    """Return (s, e) with s = fl(a + b) and a + b = s + e exactly."""
    s = a + b
    bp = s - a
    e = (a - (s - bp)) + (b - bp)
    return s, e


def split(a):
    """Dekker split of a into two non-overlapping halves."""
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    """Return (p, e) with p = fl(a * b) and a * b = p + e exactly."""
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


class KahanAccumulator:
    """Running compensated sum, usable where math.fsum needs the full list."""

    def __init__(self, value=0.0):
        self._s = float(value)
        self._t = 0.0

    def add(self, y):
        y, u = two_sum(float(y), self._t)
        self._s, self._t = two_sum(y, self._s)
        if self._s == 0:
            self._s = u
        else:
            self._t += u
        return self

    def extend(self, values: Iterable[float]):
        for v in values:
            self.add(v)
        return self

    @property
    def value(self) -> float:
        return self._s + self._t

    def __float__(self):
        return self.value


def fsum(values) -> float:
    """Correctly rounded sum of a float array or iterable."""
    if isinstance(values, np.ndarray):
        values = values.ravel().tolist()
    return math.fsum(values)


def csum(values) -> complex:
    """Correctly rounded sum of a complex array, real and imaginary parts separately."""
    arr = np.asarray(values)
    if not np.iscomplexobj(arr):
        return complex(fsum(arr), 0.0)
    return complex(fsum(arr.real), fsum(arr.imag))


def compensated_cumsum(values, block: int = CUMSUM_BLOCK) -> np.ndarray:
    """Running sums of ``values``.

    Inside a block of fixed length the plain cumulative sum is used; the
    block offsets are correctly rounded prefix sums of the block totals.
    Block boundaries depend only on ``block``.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out

    acc = KahanAccumulator()
    for start in range(0, n, block):
        stop = min(start + block, n)
        chunk = values[start:stop]
        offset = acc.value
        out[start:stop] = np.cumsum(chunk) + offset
        acc.add(fsum(chunk))
        # Re-anchor the block end on the exact running total.
        out[stop - 1] = acc.value
    return out


def parallel_map(fn: Callable, items: Sequence, workers: int = 1) -> List:
    """Map ``fn`` over ``items`` and return results in input order.

    With ``workers > 1`` the calls run on a thread pool; numpy releases the
    GIL in the heavy kernels. Callers reduce the returned list themselves.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    logger.debug(f"parallel_map: {len(items)} items on {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunk_bounds(lo: int, hi: int, size: int) -> List[Tuple[int, int]]:
    """Half-open [a, b) ranges covering [lo, hi); independent of worker count."""
    return [(a, min(a + size, hi)) for a in range(lo, hi, size)]

"""
Riemann zeta function off the pole.

Euler-Maclaurin summation with an explicit remainder bound, vectorised over
many arguments, plus an independent alternating-series oracle.
"""

import logging
import math
from typing import Tuple

import mpmath
import numpy as np
from scipy.special import bernoulli

from compensated import csum, fsum
from error_logger import CeilingError, PoleError, UnsupportedError
from models import ZetaValue


logger = logging.getLogger(__name__)

IM_CEILING = 1.0e4
EM_ORDER = 16
_ROW_BUDGET = 1 << 22  # complex entries per head block

_BERNOULLI = bernoulli(2 * EM_ORDER + 2)
_BERN_OVER_FACT = np.array([_BERNOULLI[i] / math.factorial(i) for i in range(2 * EM_ORDER + 3)])
_EPS = np.finfo(np.float64).eps


def terms_for(t_abs: float, order: int = EM_ORDER) -> int:
    """Head length N for |Im s| = t_abs; keeps |s + 2J| / (2 pi N) below 1/2."""
    return int(math.ceil(2.0 * (t_abs + 2 * order + 2) / (2.0 * math.pi))) + 10


def _check_arguments(s: np.ndarray):
    if np.any(s == 1.0):
        raise PoleError("zeta has a pole at s = 1")
    if np.any(np.abs(s.imag) > IM_CEILING):
        raise CeilingError(f"|Im s| above the evaluation ceiling {IM_CEILING:g}")
    if np.any(s.real + 2 * EM_ORDER + 1 <= 0):
        raise UnsupportedError(f"Re s must exceed {-(2 * EM_ORDER + 1)}")


def _zeta_tail(s: np.ndarray, N: int, order: int = EM_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Euler-Maclaurin tail at head length N and its remainder bound."""
    logN = math.log(N)
    n_pow = np.exp(-s * logN)                     # N^{-s}
    tail = N * n_pow / (s - 1.0) + 0.5 * n_pow

    term = s * n_pow / N                          # (s)_1 N^{-s-1}
    tail = tail + _BERN_OVER_FACT[2] * term
    for j in range(1, order):
        term = term * (s + 2 * j - 1) * (s + 2 * j) / (N * N)
        tail = tail + _BERN_OVER_FACT[2 * j + 2] * term

    last = term * (s + 2 * order - 1) * (s + 2 * order) / (N * N)
    remainder = (np.abs(last * _BERN_OVER_FACT[2 * order + 2] * (s + 2 * order + 1))
                 / (s.real + 2 * order + 1))
    return tail, remainder


def _zeta_block(s: np.ndarray, N: int, order: int = EM_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """zeta(s) for an array s sharing one head length N; returns (values, bounds)."""
    logn = np.log(np.arange(1, N, dtype=np.float64))
    head = np.empty(s.size, dtype=np.complex128)
    head_abs = np.empty(s.size, dtype=np.float64)

    rows = max(1, _ROW_BUDGET // max(N, 1))
    for a in range(0, s.size, rows):
        block = s[a:a + rows]
        head[a:a + rows] = np.exp(-np.outer(block, logn)).sum(axis=1)
        head_abs[a:a + rows] = np.exp(-np.outer(block.real, logn)).sum(axis=1)

    tail, remainder = _zeta_tail(s, N, order)
    rounding = 8.0 * _EPS * (head_abs + np.abs(tail)) * math.log2(N + 1)
    return head + tail, remainder + rounding


def zeta_values(s, terms: int = None) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised zeta(s); returns (values, error bounds) shaped like ``s``."""
    s = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    shape = s.shape
    s = s.ravel()
    _check_arguments(s)

    values = np.empty(s.size, dtype=np.complex128)
    bounds = np.empty(s.size, dtype=np.float64)
    if terms is not None:
        values[:], bounds[:] = _zeta_block(s, int(terms))
        return values.reshape(shape), bounds.reshape(shape)

    # Group by head length, rounded up to a multiple of 32.
    needed = np.array([terms_for(abs(t)) for t in s.imag])
    needed = ((needed + 31) // 32) * 32
    for N in np.unique(needed):
        idx = np.nonzero(needed == N)[0]
        values[idx], bounds[idx] = _zeta_block(s[idx], int(N))
    return values.reshape(shape), bounds.reshape(shape)


def zeta_eval(s, terms: int = None) -> ZetaValue:
    """zeta(s) with its Euler-Maclaurin error budget."""
    s = complex(s)
    N = int(terms) if terms is not None else terms_for(abs(s.imag))
    arr = np.array([s], dtype=np.complex128)
    _check_arguments(arr)

    # Scalar path: correctly rounded head sum.
    logn = np.log(np.arange(1, N, dtype=np.float64))
    head = csum(np.exp(-s * logn))
    head_abs = fsum(np.exp(-s.real * logn))
    tail, remainder = _zeta_tail(arr, N)
    tail = complex(tail[0])
    budget = float(remainder[0]) + 8.0 * _EPS * (head_abs + abs(tail))
    return ZetaValue(s=s, value=head + tail, err_budget=budget, terms=N)


def zeta_eta_oracle(s, dps: int = 30) -> complex:
    """zeta(s) = eta(s) / (1 - 2^{1-s}), eta by Borwein's accelerated alternating series."""
    s = complex(s)
    t = abs(s.imag)
    n = int(math.ceil((math.pi * t / 2.0 + 40.0) / 1.76)) + 10
    # The series cancels about pi t / (2 log 10) digits.
    dps = max(dps, int(math.pi * t / (2.0 * math.log(10.0))) + 25)
    with mpmath.workdps(dps):
        sm = mpmath.mpc(s.real, s.imag)
        d = []
        acc = mpmath.mpf(0)
        for i in range(n + 1):
            acc += (mpmath.factorial(n + i - 1) * mpmath.mpf(4) ** i
                    / (mpmath.factorial(n - i) * mpmath.factorial(2 * i)))
            d.append(n * acc)
        total = mpmath.mpc(0)
        for k in range(n):
            total += (-1) ** k * (d[k] - d[n]) / mpmath.power(k + 1, sm)
        eta = -total / d[n]
        return complex(eta / (1 - mpmath.power(2, 1 - sm)))

"""
Divisor tables, the exact error term Delta_k and its panel-exact integrals.

Between consecutive integers the summatory function is constant, so
Delta_k(u) = S - u P_{k-1}(log u) - zeta^k(0) on every panel. The
integrator expands u P(log u) in a Taylor polynomial about the panel base,
truncated below binary64 rounding, and integrates powers of the resulting
polynomial in closed form.
"""

import logging
import math
import os
import time
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as npoly

from compensated import chunk_bounds, compensated_cumsum, csum, fsum, parallel_map
from error_logger import (CapacityError, DomainError, ExactOverflowError,
                          UnsupportedError)
from models import DivisorTable, ErrorTermProfile, MainTermModel
from sieve_cache import load_table, save_table  # noqa: F401  (re-exported)


logger = logging.getLogger(__name__)

EXACT_LIMIT = 2 ** 53
BYTES_PER_ENTRY = 36
DEFAULT_MEMORY_BUDGET = 4 * 1024 ** 3
CHUNK = 1 << 16
FINE = 32           # panels below this base are split so h / a <= 1 / FINE
MAX_ORDER = 48
_EPS = np.finfo(np.float64).eps
_TARGET = 2.0 ** -53


def memory_budget() -> int:
    raw = os.environ.get("DIVLAB_MEMORY_BUDGET")
    if not raw:
        return DEFAULT_MEMORY_BUDGET
    try:
        return int(float(raw))
    except ValueError:
        logger.warning(f"Ignoring malformed DIVLAB_MEMORY_BUDGET={raw!r}")
        return DEFAULT_MEMORY_BUDGET


# ---------------------------------------------------------------------------
# Sieve
# ---------------------------------------------------------------------------

def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(n + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if is_prime[p]:
            is_prime[p * p::p] = False
    return np.nonzero(is_prime)[0].astype(np.int64)


def _exponent_factors(k: int, emax: int) -> np.ndarray:
    """d_k(p^e) = C(e + k - 1, k - 1) for e = 0..emax."""
    table = [math.comb(e + k - 1, k - 1) for e in range(emax + 1)]
    if table[-1] > EXACT_LIMIT:
        raise ExactOverflowError(f"d_{k}(p^{emax}) = {table[-1]} exceeds 2^53")
    return np.array(table, dtype=np.int64)


def dirichlet_convolve_ones(values: np.ndarray) -> np.ndarray:
    """(f * 1)(n) = sum_{d | n} f(d); ``values[n - 1]`` holds f(n)."""
    values = np.asarray(values, dtype=np.int64)
    N = values.size
    out = np.zeros(N + 1, dtype=np.int64)
    padded = np.concatenate(([0], values))
    for d in range(1, N + 1):
        out[d::d] += padded[d]
    return out[1:]


def sieve_dk(k: int, N: int, method: str = "sieve") -> DivisorTable:
    """d_k(n) for 1 <= n <= N.

    ``method="sieve"`` works prime by prime with d_k(p^e) = C(e+k-1, k-1);
    ``method="convolution"`` applies k - 1 Dirichlet convolutions with 1.
    """
    k, N = int(k), int(N)
    if k < 1 or N < 1:
        raise DomainError(f"sieve needs k >= 1 and N >= 1 (got k={k}, N={N})")
    need = BYTES_PER_ENTRY * N
    budget = memory_budget()
    if need > budget:
        raise CapacityError(f"sieve for N={N} needs ~{need} bytes, budget is {budget}")

    started = time.perf_counter()
    if method == "convolution":
        values = np.ones(N, dtype=np.int64)
        for _ in range(k - 1):
            values = dirichlet_convolve_ones(values)
    elif method == "sieve":
        values = _sieve_multiplicative(k, N)
    else:
        raise UnsupportedError(f"unknown sieve method {method!r}")

    prefix_total = int(values.sum(dtype=np.float64))
    if prefix_total > EXACT_LIMIT or np.any(values < 0):
        raise ExactOverflowError(f"summatory d_{k} up to {N} leaves the exact range")

    elapsed = time.perf_counter() - started
    logger.info(f"Sieved d_{k} up to N={N} ({method}) in {elapsed:.2f}s")
    return DivisorTable(k, N, values)


def _sieve_multiplicative(k: int, N: int) -> np.ndarray:
    # Index n holds d_k(n); slot 0 is unused.
    values = np.ones(N + 1, dtype=np.int64)
    if k == 1 or N == 1:
        return values[1:]

    emax = max(1, N.bit_length() - 1)
    factors = _exponent_factors(k, emax)
    shadow = np.ones(N + 1, dtype=np.float64) if k >= 5 else None
    rem = np.arange(N + 1, dtype=np.int64)

    for p in primes_upto(math.isqrt(N)):
        p = int(p)
        count = np.ones(N // p, dtype=np.int64)
        pj = p * p
        while pj <= N:
            step = pj // p
            count[step - 1::step] += 1
            pj *= p
        values[p::p] *= factors[count]
        if shadow is not None:
            shadow[p::p] *= factors[count].astype(np.float64)
        rem[p::p] //= np.power(p, count)

    # What is left above sqrt(N) is a single prime to the first power.
    big = rem > 1
    values[big] *= k
    if shadow is not None:
        shadow[big] *= k
        if shadow.max() > EXACT_LIMIT:
            raise ExactOverflowError(f"d_{k}(n) exceeds 2^53 below N={N}")
    return values[1:]


# ---------------------------------------------------------------------------
# Summatory function and Delta_k
# ---------------------------------------------------------------------------

def _check_range(table: DivisorTable, x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 1.0) or np.any(x > table.limit):
        raise DomainError(f"x must lie in [1, {table.limit}]")
    return x


def summatory_values(table: DivisorTable, xs, primed: bool = True) -> np.ndarray:
    xs = _check_range(table, xs)
    n = np.floor(xs).astype(np.int64)
    total = table.prefix[n - 1].astype(np.float64)
    if primed:
        at_integer = xs == n
        total = total - np.where(at_integer, 0.5 * table.values[n - 1], 0.0)
    return total


def summatory(table: DivisorTable, x: float, primed: bool = True) -> float:
    """Sum of d_k(n) over n <= x, the last term halved at integer x when primed."""
    return float(summatory_values(table, np.array([x]), primed)[0])


def _check_model(table: DivisorTable, model: MainTermModel):
    if model.k != table.k:
        raise DomainError(f"model is for k={model.k}, table for k={table.k}")


def delta_values(table: DivisorTable, model: MainTermModel, xs,
                 primed: bool = True) -> np.ndarray:
    _check_model(table, model)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    total = summatory_values(table, xs, primed)
    return total - model.evaluate(xs) - model.zeta_k0


def delta_k(table: DivisorTable, model: MainTermModel, x: float,
            primed: bool = True) -> float:
    """Delta_k(x) = Sum' d_k(n) - x P_{k-1}(log x) - zeta^k(0)."""
    return float(delta_values(table, model, [x], primed)[0])


# ---------------------------------------------------------------------------
# Polynomial helpers, one polynomial per row, constant term first
# ---------------------------------------------------------------------------

def _polymul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n, da = A.shape
    db = B.shape[1]
    C = np.zeros((n, da + db - 1), dtype=np.result_type(A, B))
    for i in range(da):
        C[:, i:i + db] += A[:, i:i + 1] * B
    return C


def _polypow(Q: np.ndarray, power: int) -> np.ndarray:
    if power == 1:
        return Q
    if power == 2:
        return _polymul(Q, Q)
    if power == 4:
        Q2 = _polymul(Q, Q)
        return _polymul(Q2, Q2)
    raise UnsupportedError(f"power {power} not in (1, 2, 4)")


def _moment(C: np.ndarray, h: np.ndarray, j: int = 0) -> np.ndarray:
    """Row-wise integral over [0, h] of t^j times the polynomial C(t)."""
    res = np.zeros(C.shape[0], dtype=C.dtype)
    for i in range(C.shape[1] - 1, -1, -1):
        res = res * h + C[:, i] / (i + j + 1)
    return res * h ** (j + 1)


def _antiderivative(C: np.ndarray) -> np.ndarray:
    out = np.zeros((C.shape[0], C.shape[1] + 1), dtype=C.dtype)
    out[:, 1:] = C / np.arange(1, C.shape[1] + 1)
    return out


def _polyval(C: np.ndarray, t: np.ndarray) -> np.ndarray:
    res = np.zeros(C.shape[0], dtype=C.dtype)
    for i in range(C.shape[1] - 1, -1, -1):
        res = res * t + C[:, i]
    return res


def taylor_order(ratio: float) -> int:
    """Smallest K with ratio^(K+1) / (K (K+1)) <= 2^-53."""
    for K in range(1, MAX_ORDER + 1):
        if ratio ** (K + 1) / (K * (K + 1)) <= _TARGET:
            return K
    return MAX_ORDER


# ---------------------------------------------------------------------------
# Weights for transforms
# ---------------------------------------------------------------------------

class PowerWeight:
    """w(u) = u^{-s}."""

    def __init__(self, s):
        self.s = complex(s)

    def order(self, ratio: float, hmax: float) -> int:
        s_abs = abs(self.s)
        if (s_abs + 2.0) * ratio >= 0.5:
            raise DomainError(f"panels too coarse for u^-s with |s|={s_abs:.3g}; "
                              f"use fine >= {fine_for(s_abs)}")
        # |binom(-s, j)| r^j, each factor below 1/2, so the tail is at most twice the next term
        term = 1.0
        for J in range(4 * MAX_ORDER):
            term *= (s_abs + J) / (J + 1) * ratio
            if 2.0 * term <= _TARGET:
                return max(J, 1)
        return 4 * MAX_ORDER

    def taylor(self, a: np.ndarray, J: int) -> np.ndarray:
        b = np.empty((a.size, J + 1), dtype=np.complex128)
        b[:, 0] = np.exp(-self.s * np.log(a))
        for j in range(J):
            b[:, j + 1] = b[:, j] * (-self.s - j) / ((j + 1) * a)
        return b


class ExpWeight:
    """w(u) = exp(-u / T)."""

    def __init__(self, T: float):
        self.T = float(T)

    def order(self, ratio: float, hmax: float) -> int:
        r = hmax / self.T
        term = 1.0
        for J in range(1, 4 * MAX_ORDER):
            term *= r / (J + 1)
            if term <= _TARGET:
                return J
        return 4 * MAX_ORDER

    def taylor(self, a: np.ndarray, J: int) -> np.ndarray:
        b = np.empty((a.size, J + 1), dtype=np.complex128)
        b[:, 0] = np.exp(-a / self.T)
        for j in range(J):
            b[:, j + 1] = b[:, j] * (-1.0 / self.T) / (j + 1)
        return b


def fine_for(s_abs: float) -> int:
    """Panel split threshold that keeps u^-s Taylor series short."""
    return max(FINE, 8 * int(math.ceil(s_abs + 1.0)))


# ---------------------------------------------------------------------------
# Panel integrator
# ---------------------------------------------------------------------------

KINDS = ("I1", "I2", "I4")
_POWER_OF = {"I1": 1, "I2": 2, "I4": 4}
# running integrals of a basic kind
_DERIVED = {"I1sq": "I1", "I2int": "I2"}


def _derived_piece(kind: str, Q: np.ndarray, c: np.ndarray, t) -> np.ndarray:
    """Integral over [0, t] of I1^2 or I2 on pieces starting at c = I1 or I2."""
    if kind == "I1sq":
        P = _antiderivative(Q)
        return c * c * t + 2.0 * c * _moment(P, t) + _moment(_polymul(P, P), t)
    return c * t + _moment(_antiderivative(_polypow(Q, 2)), t)


class PanelIntegrator:
    """Running integrals of Delta_k, Delta_k^2 and Delta_k^4 on [1, X], and of I1^2 and I2.

    Pieces are the unit panels [n, n+1], split below ``fine`` into equal
    sub-pieces. Cumulative values are stored at piece starts; a query
    integrates the partial piece in closed form.
    """

    def __init__(self, table: DivisorTable, model: MainTermModel,
                 X: Optional[float] = None, fine: int = FINE, workers: int = 1):
        _check_model(table, model)
        X = float(table.limit if X is None else X)
        if X < 1.0 or X > table.limit:
            raise DomainError(f"integration range [1, {X}] exceeds the table limit {table.limit}")
        self.table = table
        self.model = model
        self.X = X
        self.fine = int(fine)
        self.workers = workers

        top = max(2, int(math.ceil(X)))
        small = []
        for n in range(1, min(self.fine, top)):
            m = int(math.ceil(self.fine / n))
            small.append(n + np.arange(m) / m)
        big = np.arange(max(self.fine, 1), top, dtype=np.float64)
        self.bases = np.concatenate(small + [big]) if small else big
        self.end = float(top)
        self.steps = np.diff(np.append(self.bases, self.end))
        self.pieces = self.bases.size

        self._R = [np.asarray(model.coeffs, dtype=np.float64)]
        for m in range(MAX_ORDER + 1):
            R = self._R[-1]
            self._R.append(npoly.polyadd((1 - m) * R, npoly.polyder(R)) if R.size > 1
                           else (1 - m) * R)
        self._cum: Dict[str, np.ndarray] = {}
        self._budget: Dict[str, float] = {}
        logger.debug(f"PanelIntegrator k={table.k} X={X:g}: {self.pieces} pieces")

    # -- piece polynomials ---------------------------------------------------

    def _taylor(self, idx) -> np.ndarray:
        """Rows q_i(t) = Delta(a_i + t) for the pieces ``idx``."""
        a = self.bases[idx]
        h = self.steps[idx]
        K = taylor_order(float(np.max(h / a)))
        L = np.log(a)
        n = np.floor(a).astype(np.int64)
        S = self.table.prefix[n - 1].astype(np.float64)

        Q = np.empty((a.size, K + 1), dtype=np.float64)
        scale = a.copy()
        inv = 1.0 / a
        for m in range(K + 1):
            Q[:, m] = -scale * npoly.polyval(L, self._R[m]) / math.factorial(m)
            scale = scale * inv
        Q[:, 0] += S - self.model.zeta_k0
        return Q

    def _chunk(self, bounds, kinds: Sequence[str]) -> Dict[str, tuple]:
        lo, hi = bounds
        idx = slice(lo, hi)
        Q = self._taylor(idx)
        h = self.steps[idx]
        S_abs = np.abs(self.table.prefix[np.floor(self.bases[idx]).astype(np.int64) - 1])
        q0 = np.abs(Q[:, 0])
        out = {}
        for kind in kinds:
            p = _POWER_OF[kind]
            v = _moment(_polypow(Q, p), h)
            err = p * q0 ** (p - 1) * _EPS * (S_abs + np.abs(Q[:, 0])) * h
            out[kind] = (v, fsum(np.abs(v)), fsum(err))
        return out

    def _ensure(self, kinds: Iterable[str]):
        missing = [k for k in kinds if k not in self._cum]
        if not missing:
            return
        started = time.perf_counter()
        basic = [k for k in missing if k in KINDS]
        derived = [k for k in missing if k in _DERIVED]
        for kind in derived:
            base = _DERIVED[kind]
            if base not in self._cum and base not in basic:
                basic.append(base)

        if basic:
            chunks = chunk_bounds(0, self.pieces, CHUNK)
            results = parallel_map(lambda b: self._chunk(b, basic), chunks, self.workers)
            for kind in basic:
                v = np.concatenate([r[kind][0] for r in results])
                total_abs = math.fsum(r[kind][1] for r in results)
                err = math.fsum(r[kind][2] for r in results)
                self._cum[kind] = np.concatenate(([0.0], compensated_cumsum(v)))
                self._budget[kind] = err + 4.0 * _EPS * math.log2(self.pieces + 1) * total_abs

        for kind in derived:
            chunks = chunk_bounds(0, self.pieces, CHUNK)
            results = parallel_map(lambda b: self._chunk_derived(b, kind), chunks, self.workers)
            v = np.concatenate(results)
            self._cum[kind] = np.concatenate(([0.0], compensated_cumsum(v)))
            self._budget[kind] = 8.0 * _EPS * math.log2(self.pieces + 1) * fsum(np.abs(v))

        logger.info(f"Panel pass {missing} over {self.pieces} pieces "
                    f"in {time.perf_counter() - started:.2f}s")

    def _chunk_derived(self, bounds, kind: str) -> np.ndarray:
        lo, hi = bounds
        Q = self._taylor(slice(lo, hi))
        return _derived_piece(kind, Q, self._cum[_DERIVED[kind]][lo:hi], self.steps[lo:hi])

    # -- queries -------------------------------------------------------------

    def _locate(self, x: np.ndarray) -> np.ndarray:
        if np.any(x < 1.0) or np.any(x > self.end):
            raise DomainError(f"x must lie in [1, {self.end:g}]")
        idx = np.searchsorted(self.bases, x, side="right") - 1
        return np.clip(idx, 0, self.pieces - 1)

    def _partial(self, idx: np.ndarray, t: np.ndarray, kind: str) -> np.ndarray:
        Q = self._taylor(idx)
        if kind in _DERIVED:
            return _derived_piece(kind, Q, self._cum[_DERIVED[kind]][idx], t)
        return _moment(_polypow(Q, _POWER_OF[kind]), t)

    def integral(self, x, kind: str = "I1") -> np.ndarray:
        """Integral over [1, x] of Delta^p (kind I1, I2, I4), I1^2 (kind I1sq) or I2 (kind I2int)."""
        if kind not in _POWER_OF and kind not in _DERIVED:
            raise UnsupportedError(f"unknown integral kind {kind!r}")
        self._ensure([kind])
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        idx = self._locate(x)
        t = x - self.bases[idx]
        return self._cum[kind][idx] + self._partial(idx, t, kind)

    def integral_between(self, x1: float, x2: float, kind: str = "I1") -> float:
        """Integral over [x1, x2]; same-piece requests avoid the cumulative difference."""
        x = np.array([x1, x2], dtype=np.float64)
        idx = self._locate(x)
        if idx[0] == idx[1] and kind not in _DERIVED:
            t = x - self.bases[idx]
            part = self._partial(idx, t, kind)
            return float(part[1] - part[0])
        values = self.integral(x, kind)
        return float(values[1] - values[0])

    def total(self, kind: str) -> float:
        self._ensure([kind])
        return float(self._cum[kind][-1])

    def rounding_budget(self, kind: str) -> float:
        self._ensure([kind])
        return self._budget[kind]

    # -- weighted integrals --------------------------------------------------

    def _weighted_chunk(self, bounds, poly_fn, weights) -> List[complex]:
        lo, hi = bounds
        a = self.bases[lo:hi]
        h = self.steps[lo:hi]
        C = poly_fn(slice(lo, hi))
        ratio = float(np.max(h / a))
        hmax = float(np.max(h))
        J = max(w.order(ratio, hmax) for w in weights)
        G = np.stack([_moment(C, h, j) for j in range(J + 1)], axis=1)
        return [csum(np.sum(w.taylor(a, J) * G, axis=1)) for w in weights]

    def _weighted(self, poly_fn, weights, label: str) -> np.ndarray:
        weights = list(weights)
        if not weights:
            return np.zeros(0, dtype=np.complex128)
        started = time.perf_counter()
        chunks = chunk_bounds(0, self.pieces, CHUNK)
        parts = parallel_map(lambda b: self._weighted_chunk(b, poly_fn, weights),
                             chunks, self.workers)
        totals = np.array([csum([part[i] for part in parts]) for i in range(len(weights))])
        logger.debug(f"Weighted {label} pass, {len(weights)} weights, "
                     f"{time.perf_counter() - started:.2f}s")
        return totals

    def weighted(self, power: int, weights) -> np.ndarray:
        """Integral over [1, end] of Delta^power(u) w(u) du, one value per weight."""
        return self._weighted(lambda idx: _polypow(self._taylor(idx), power), weights,
                              f"Delta^{power}")

    def remainder_weighted(self, coefficient: float, exponent: float, weights) -> np.ndarray:
        """Integral over [1, end] of (I2(u) - coefficient u^exponent) w(u) du."""
        self._ensure(["I2"])
        growth = PowerWeight(-exponent)

        def poly(idx):
            a = self.bases[idx]
            h = self.steps[idx]
            F = _antiderivative(_polypow(self._taylor(idx), 2))
            J = growth.order(float(np.max(h / a)), float(np.max(h)))
            main = coefficient * growth.taylor(a, J).real
            width = max(F.shape[1], J + 1)
            out = np.zeros((a.size, width), dtype=np.float64)
            out[:, :F.shape[1]] += F
            out[:, :J + 1] -= main
            out[:, 0] += self._cum["I2"][idx]
            return out

        return self._weighted(poly, weights, f"remainder u^{exponent:g}")


# ---------------------------------------------------------------------------
# Public integral operations
# ---------------------------------------------------------------------------

def integral_delta(table: DivisorTable, model: MainTermModel, grid,
                   workers: int = 1) -> np.ndarray:
    """Running I1(x) = integral of Delta_k over [1, x] at each grid point."""
    grid = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    integrator = PanelIntegrator(table, model, float(np.max(grid)), workers=workers)
    return integrator.integral(grid, "I1")


def integral_delta_pow(table: DivisorTable, model: MainTermModel, grid,
                       power: int, workers: int = 1) -> np.ndarray:
    """Running integral of Delta_k^power, power 2 (any k) or 4 (k = 2)."""
    if power not in (2, 4):
        raise UnsupportedError(f"power must be 2 or 4, got {power}")
    if power == 4 and table.k != 2:
        raise UnsupportedError("fourth power integrals are provided for k = 2 only")
    grid = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    integrator = PanelIntegrator(table, model, float(np.max(grid)), workers=workers)
    return integrator.integral(grid, f"I{power}")


def local_average_delta(table: DivisorTable, model: MainTermModel, x: float, H: float,
                        allow_subpanel: bool = False,
                        integrator: Optional[PanelIntegrator] = None):
    """(avg, deviation) with avg the mean of Delta over [x, x+H]."""
    if H <= 0 or (not allow_subpanel and not 1.0 <= H <= x):
        raise DomainError(f"H={H} must satisfy 1 <= H <= x={x}")
    if x + H > table.limit:
        raise DomainError(f"x + H = {x + H} exceeds the sieve limit {table.limit}")
    if integrator is None or integrator.end < x + H:
        integrator = PanelIntegrator(table, model, min(float(table.limit), math.ceil(x + H) + 1.0))
    avg = integrator.integral_between(x, x + H, "I1") / H
    deviation = abs(delta_k(table, model, x) - avg)
    return avg, deviation


def build_profile(table: DivisorTable, model: MainTermModel, grid,
                  powers: Sequence[int] = (1, 2), workers: int = 1) -> ErrorTermProfile:
    """Delta_k and the running integrals I1, I2 (and I4 for k = 2) on ``grid``."""
    grid = np.sort(np.atleast_1d(np.asarray(grid, dtype=np.float64)))
    if 4 in powers and table.k != 2:
        raise UnsupportedError("fourth power integrals are provided for k = 2 only")
    for p in powers:
        if p not in (1, 2, 4):
            raise UnsupportedError(f"power {p} not in (1, 2, 4)")

    integrator = PanelIntegrator(table, model, float(grid[-1]), workers=workers)
    kinds = ["I1", "I2"] + (["I4"] if 4 in powers else [])
    integrator._ensure(kinds)

    delta = delta_values(table, model, grid)
    I1 = integrator.integral(grid, "I1")
    I2 = integrator.integral(grid, "I2")
    I4 = integrator.integral(grid, "I4") if 4 in powers else None
    budget = max(integrator.rounding_budget(k) for k in kinds)
    return ErrorTermProfile(k=table.k, grid=grid, delta=delta, I1=I1, I2=I2, I4=I4,
                            rounding_budget=budget)


def large_value_scan(table: DivisorTable, model: MainTermModel, lo: float, hi: float,
                     windows: int = 16) -> pd.DataFrame:
    """Per geometric window, the integer n maximising |Delta(n+)| n^{-1/4}.

    Delta(n+) is the right limit at n, where the full d_k(n) has been added.
    """
    _check_model(table, model)
    lo = max(1, int(math.ceil(lo)))
    hi = min(table.limit, int(math.floor(hi)))
    if hi <= lo:
        raise DomainError(f"empty scan range [{lo}, {hi}]")

    edges = np.unique(np.round(np.geomspace(lo, hi + 1, windows + 1)).astype(np.int64))
    rows = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = np.arange(a, b, dtype=np.int64)
        if n.size == 0:
            continue
        x = n.astype(np.float64)
        d = table.prefix[n - 1] - model.evaluate(x) - model.zeta_k0
        score = np.abs(d) * x ** -0.25
        j = int(np.argmax(score))
        rows.append({"x": float(x[j]), "delta": float(d[j]), "ratio": float(score[j])})
    return pd.DataFrame(rows, columns=["x", "delta", "ratio"])

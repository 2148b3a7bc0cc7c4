"""
Truncated trigonometric expansions of Delta_k and of its integral.

Phases are reduced modulo one full turn in double-double arithmetic before
the trigonometric call; (nx)^{1/k} has too few correct fractional digits in
plain binary64 once nx is large.
"""

import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special

from arith_core import PanelIntegrator, integral_delta
from compensated import chunk_bounds, fsum, parallel_map, two_prod, two_sum
from error_logger import CapacityError, DomainError, UnsupportedError
from models import DivisorTable, MainTermModel, SeriesSpec, SeriesValue, SeriesVariant


logger = logging.getLogger(__name__)

BLOCK = 1 << 16
HEURISTIC_EPS = 0.1
DELTA3_SCALE = 2.5
TAPER_START = 0.5
JUMP_REACH = 80.0
TAPER_NODES = 192

INTEGRAL_MAIN = 1.0 / (2.0 * math.sqrt(2.0) * math.pi ** 2)
INTEGRAL_SECOND = 15.0 / (2 ** 6 * math.sqrt(2.0) * math.pi ** 3)


# ---------------------------------------------------------------------------
# Phase reduction
# ---------------------------------------------------------------------------

def _kth_root_dd(ph: np.ndarray, pl: np.ndarray, k: int):
    """(r, d) with r + d ~ (ph + pl)^{1/k} to double-double accuracy."""
    r = ph ** (1.0 / k)
    sh, sl = r, np.zeros_like(r)
    for _ in range(k - 1):
        p, e = two_prod(sh, r)
        sh, sl = two_sum(p, e + sl * r)
    residual = (ph - sh) + (pl - sl)
    return r, residual / (k * r ** (k - 1))


def reduced_phase(n: np.ndarray, x: float, k: int, scale: float) -> np.ndarray:
    """frac(scale * (n x)^{1/k}) in [0, 1)."""
    ph, pl = two_prod(np.asarray(n, dtype=np.float64), float(x))
    if k == 1:
        r, d = ph, pl
    else:
        r, d = _kth_root_dd(ph, pl, k)
    zh, zl = two_prod(float(scale), r)
    zl = zl + scale * d
    f = zh - np.floor(zh)
    f = f + zl
    return f - np.floor(f)


# ---------------------------------------------------------------------------
# Block sums
# ---------------------------------------------------------------------------

def _require_table(table: DivisorTable, k: int, N: int):
    if table.k != k:
        raise DomainError(f"need a d_{k} table, got k={table.k}")
    if N > table.limit:
        raise CapacityError(f"truncation {N} exceeds the sieve limit {table.limit}")


def _trig_sum(table: DivisorTable, x: float, N: int, exponent: float, scale: float,
              shift: float, func, workers: int = 1, cutoff: Optional[int] = None) -> float:
    """sum_{n<=N} d(n) n^{-exponent} func(2 pi frac(scale (nx)^{1/k}) + shift).

    With ``cutoff`` each term also carries taper_weight(sqrt(n / cutoff)).
    """
    k = table.k

    def block(bounds):
        lo, hi = bounds
        n = np.arange(lo, hi, dtype=np.float64)
        f = reduced_phase(n, x, k, scale)
        terms = table.values[lo - 1:hi - 1] * n ** -exponent * func(2.0 * np.pi * f + shift)
        if cutoff is not None:
            terms = terms * taper_weight(np.sqrt(n / cutoff))
        return fsum(terms)

    totals = parallel_map(block, chunk_bounds(1, N + 1, BLOCK), workers)
    return math.fsum(totals)


def voronoi_tail_bound(alpha: float, M: int) -> float:
    """Upper bound for sum_{n>M} d(n) n^{-alpha} (alpha > 1).

    Partial summation with sum_{n<=t} d(n) <= t (log t + 1).
    """
    if alpha <= 1.0:
        raise DomainError("tail bound needs alpha > 1")
    M = max(int(M), 1)
    b = alpha - 1.0
    return alpha * M ** (1.0 - alpha) * ((math.log(M) + 1.0) / b + 1.0 / b ** 2)


# ---------------------------------------------------------------------------
# Tapered truncation
# ---------------------------------------------------------------------------
#
# Term n of the integrated series oscillates in x at angular frequency
# a sqrt(n/M), a = 2 pi sqrt(M/x). Weighting it by W(sqrt(n/M)) smooths the
# exact integral with a kernel of width ~1/a whose moments all vanish
# (W = 1 near 0), so polynomial pieces come through untouched and only the
# kinks of the integral, one per jump d(m) of D(x), are rounded off. Each
# kink leaves d(m) G(a (x - m)) / a behind, which is added back.

def taper_weight(r) -> np.ndarray:
    """1 up to TAPER_START, then a C^2 smoothstep down to 0 at r = 1."""
    r = np.asarray(r, dtype=np.float64)
    t = np.clip((r - TAPER_START) / (1.0 - TAPER_START), 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


@lru_cache(maxsize=1)
def _taper_quadrature() -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(TAPER_NODES)
    half = 0.5 * (1.0 - TAPER_START)
    w = TAPER_START + half * (nodes + 1.0)
    return w, half * weights * (1.0 - taper_weight(w)) / w ** 2


def jump_response(z) -> np.ndarray:
    """G(z) = -(1/pi) int_0^inf (1 - W(w)) cos(w z) / w^2 dw, even in z.

    The part over [1, inf) is cos z - |z| (pi/2 - Si|z|); the taper part is a
    fixed Gauss-Legendre rule on [TAPER_START, 1]. G decays like |z|^-4.
    """
    z = np.abs(np.asarray(z, dtype=np.float64))
    w, weights = _taper_quadrature()
    inner = np.cos(np.multiply.outer(z, w)) @ weights
    si, _ = special.sici(z)
    outer = np.cos(z) - z * (0.5 * np.pi - si)
    return -(inner + outer) / np.pi


def jump_reach(x: float, M: int) -> float:
    """Distance JUMP_REACH / a from x beyond which jumps are ignored."""
    return JUMP_REACH / (2.0 * math.pi * math.sqrt(M / x))


def jump_correction(table: DivisorTable, x: float, M: int) -> float:
    """Sum of d(m) G(a (x - m)) / a over the jumps within JUMP_REACH / a of x."""
    a = 2.0 * math.pi * math.sqrt(M / x)
    reach = jump_reach(x, M)
    lo = max(1, int(math.ceil(x - reach)))
    hi = int(math.floor(x + reach))
    if hi > table.limit:
        raise CapacityError(f"jump correction at x={x:g} needs d(n) up to {hi}, "
                            f"the sieve stops at {table.limit}")
    if hi < lo:
        return 0.0
    m = np.arange(lo, hi + 1, dtype=np.float64)
    return fsum(table.values[lo - 1:hi] * jump_response(a * (x - m))) / a


# ---------------------------------------------------------------------------
# Series
# ---------------------------------------------------------------------------

def integral_series_parts(table: DivisorTable, x: float, M: int, workers: int = 1,
                          tapered: bool = True) -> Tuple[float, float]:
    """The x^{3/4} sine series and the x^{1/4} cosine series, M terms each."""
    _require_table(table, 2, M)
    shift = -math.pi / 4.0
    cutoff = M if tapered else None
    main = _trig_sum(table, x, M, 1.25, 2.0, shift, np.sin, workers, cutoff)
    second = _trig_sum(table, x, M, 1.75, 2.0, shift, np.cos, workers, cutoff)
    return INTEGRAL_MAIN * x ** 0.75 * main, INTEGRAL_SECOND * x ** 0.25 * second


def voronoi_integral_delta(table: DivisorTable, x: float, M: int,
                           exact_ref: Optional[float] = None,
                           workers: int = 1) -> SeriesValue:
    """Series for the integral of Delta over [1, x], without c_1 and O(x^{-1/4}).

    Tapered over the last three quarters of [1, M] plus the jump correction;
    the bound covers every term the taper touches and the correction itself.
    """
    if x < 1.0:
        raise DomainError("x must be at least 1")
    spec = SeriesSpec(k=2, x=x, truncation=M, variant=SeriesVariant.INTEGRAL).validate()
    main, second = integral_series_parts(table, x, M, workers)
    correction = jump_correction(table, x, M)
    full = max(int(TAPER_START ** 2 * M), 1)
    tail = (INTEGRAL_MAIN * x ** 0.75 * voronoi_tail_bound(1.25, full)
            + INTEGRAL_SECOND * x ** 0.25 * voronoi_tail_bound(1.75, full)
            + abs(correction))
    logger.debug(f"Integral series at x={x:g}, M={M}: jump correction {correction:.4g}")
    return SeriesValue(value=main + second + correction, tail_bound=tail, heuristic=False,
                       spec=spec, exact_ref=exact_ref)


def _delta_series(table: DivisorTable, x: float, N: int, k: int, workers: int) -> float:
    amplitude = x ** ((k - 1) / (2.0 * k)) / (math.pi * math.sqrt(k))
    shift = (k - 3) * math.pi / 4.0
    total = _trig_sum(table, x, N, (k + 1) / (2.0 * k), float(k), shift, np.cos, workers)
    return amplitude * total


def general_budget(k: int, x: float, N: int, eps: float = HEURISTIC_EPS) -> float:
    return x ** eps * (1.0 + x ** ((k - 1) / k) * N ** (-1.0 / k)
                       + (x * N) ** (0.5 - 1.0 / k))


def voronoi_delta3(table: DivisorTable, x: float, X: float, N: Optional[int] = None,
                   exact_ref: Optional[float] = None, workers: int = 1) -> SeriesValue:
    """Truncated cosine series for Delta_3(x), X <= x <= 2X, N = X^2 by default."""
    full = int(math.floor(X * X))
    N = full if N is None else int(N)
    spec = SeriesSpec(k=3, x=x, truncation=N, variant=SeriesVariant.DELTA3, X=X).validate()
    _require_table(table, 3, N)
    if N != full:
        logger.warning(f"Delta_3 series truncated at {N} instead of X^2 = {full}")
    value = _delta_series(table, x, N, 3, workers)
    return SeriesValue(value=value, tail_bound=DELTA3_SCALE * X ** HEURISTIC_EPS,
                       heuristic=True, spec=spec, exact_ref=exact_ref)


def voronoi_delta_k(table: DivisorTable, x: float, N: int, k: int,
                    exact_ref: Optional[float] = None, workers: int = 1) -> SeriesValue:
    """Truncated cosine series for Delta_k(x) with its heuristic error budget."""
    if k < 2:
        raise UnsupportedError("the cosine series needs k >= 2")
    if x < 1.0:
        raise DomainError("x must be at least 1")
    spec = SeriesSpec(k=k, x=x, truncation=N, variant=SeriesVariant.GENERAL).validate()
    _require_table(table, k, N)
    value = _delta_series(table, x, N, k, workers)
    return SeriesValue(value=value, tail_bound=general_budget(k, x, N), heuristic=True,
                       spec=spec, exact_ref=exact_ref)


# ---------------------------------------------------------------------------
# Checks built on the series
# ---------------------------------------------------------------------------

def fit_c1(table: DivisorTable, model: MainTermModel, xs: Sequence[float], M: int,
           workers: int = 1) -> Tuple[float, float]:
    """Least-squares c_1 (the mean of I1 - series) and the spread about it."""
    xs = np.asarray(xs, dtype=np.float64)
    exact = integral_delta(table, model, xs, workers=workers)
    series = np.array([voronoi_integral_delta(table, x, M, workers=workers).value for x in xs])
    diff = exact - series
    return float(np.mean(diff)), float(np.std(diff))


def sign_change_count(table: DivisorTable, xs: Sequence[float], M: int,
                      workers: int = 1) -> int:
    """Sign changes of the x^{3/4} sine series along ``xs``."""
    values = np.array([integral_series_parts(table, x, M, workers)[0] for x in xs])
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def first_derivative_test_check(table: DivisorTable, model: MainTermModel, X: float,
                                eps: float = HEURISTIC_EPS, constant: float = 1.0,
                                integrator: Optional[PanelIntegrator] = None):
    """(|integral of Delta_3 over [X, 2X]|, constant * X^{1+eps})."""
    if table.k != 3:
        raise DomainError("the first-derivative check is for k = 3")
    if X < 2:
        raise DomainError("X must be at least 2")
    if X * X > table.limit or 2 * X > table.limit:
        raise CapacityError(f"X={X} needs X^2 within the sieve limit {table.limit}")
    if integrator is None or integrator.end < 2 * X:
        integrator = PanelIntegrator(table, model, 2.0 * X)
    lhs = abs(integrator.integral_between(X, 2.0 * X, "I1"))
    return lhs, constant * X ** (1.0 + eps)


def first_derivative_scan(table: DivisorTable, model: MainTermModel,
                          Xs: Sequence[float], eps: float = HEURISTIC_EPS) -> Tuple[pd.DataFrame, float, float]:
    """Tabulate the check over ``Xs``; returns (frame, measured constant, log-log slope)."""
    Xs = np.asarray(sorted(Xs), dtype=np.float64)
    integrator = PanelIntegrator(table, model, 2.0 * Xs[-1])
    lhs = np.array([first_derivative_test_check(table, model, X, eps, 1.0, integrator)[0]
                    for X in Xs])
    constant = float(np.max(lhs / Xs ** (1.0 + eps)))
    slope = float(np.polyfit(np.log(Xs), np.log(np.maximum(lhs, 1e-300)), 1)[0]) \
        if Xs.size >= 2 else float("nan")
    frame = pd.DataFrame({
        "X": Xs,
        "lhs": lhs,
        "lhs_over_X": lhs / Xs,
        "rhs": constant * Xs ** (1.0 + eps),
    })
    logger.info(f"First-derivative scan: constant {constant:.4g}, slope {slope:.4f}")
    return frame, constant, slope

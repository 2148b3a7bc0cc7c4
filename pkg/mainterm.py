"""
Stieltjes constants, Laurent expansions of zeta^k about s = 1 and the
residue polynomial P_{k-1}.
"""

import logging
import math
from typing import Callable, Dict, List, Optional

import mpmath
import numpy as np

from compensated import csum
from error_logger import UnsupportedError
from models import MainTermModel, StieltjesTable


logger = logging.getLogger(__name__)

STIELTJES_KMAX = 12        # public range
STIELTJES_STORED = 20      # enough for zeta_laurent_pow(12, 8)
STIELTJES_FILE = "stieltjes.json"
LAURENT_MAX_ORDER = 8
MAINTERM_KMAX = 12

_memo: Dict[str, StieltjesTable] = {}


# ---------------------------------------------------------------------------
# Stieltjes constants
# ---------------------------------------------------------------------------

def _derivative_polys(n: int, count: int) -> List[List[int]]:
    """Q_0..Q_{count-1} with d^m/dx^m (log^n x / x) = Q_m(log x) / x^{m+1}."""
    q = [0] * n + [1]
    polys = [q]
    for m in range(count - 1):
        der = [i * q[i] for i in range(1, len(q))]
        q = [(der[i] if i < len(der) else 0) - (m + 1) * q[i] for i in range(len(q))]
        polys.append(q)
    return polys


def _remainder_bound(q: List[int], LN, twoJ: int):
    """Bound for the Euler-Maclaurin remainder beyond N = e^LN.

    |R| <= 2 zeta(2J) / (2 pi)^{2J} * integral_N^inf |Q_{2J}(log x)| x^{-2J-1} dx,
    and |Q(L)| <= sum |c_i| L^i turns the integral into incomplete gammas.
    """
    total = mpmath.mpf(0)
    for i, c in enumerate(q):
        if c:
            total += abs(c) * mpmath.gammainc(i + 1, twoJ * LN) / mpmath.mpf(twoJ) ** (i + 1)
    return 2 * mpmath.zeta(twoJ) / (2 * mpmath.pi) ** twoJ * total


def _em_stieltjes(nmax: int, dps: int, order: int, N: int = 1000):
    """gamma_0..gamma_nmax as mpf values plus remainder bounds, head length N."""
    polys = [_derivative_polys(n, 2 * order + 1) for n in range(nmax + 1)]

    with mpmath.workdps(dps):
        sums = [mpmath.mpf(0)] * (nmax + 1)
        for m in range(1, N + 1):
            L = mpmath.log(m)
            term = mpmath.mpf(1) / m
            for n in range(nmax + 1):
                sums[n] += term
                term *= L

        LN = mpmath.log(N)
        bern = [mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j) for j in range(order + 1)]
        values, bounds = [], []
        for n in range(nmax + 1):
            q = polys[n]
            val = sums[n] - LN ** (n + 1) / (n + 1) - LN ** n / N / 2
            for j in range(1, order + 1):
                deriv = mpmath.polyval(q[2 * j - 1][::-1], LN) / mpmath.mpf(N) ** (2 * j)
                val -= bern[j] * deriv
            values.append(val)
            bounds.append(_remainder_bound(q[2 * order], LN, 2 * order))
    return values, bounds, N


def compute_stieltjes(nmax: int, dps: int = 40, order: int = 10) -> StieltjesTable:
    """Euler-Maclaurin Stieltjes constants, cross-checked at doubled precision."""
    logger.info(f"Computing Stieltjes constants 0..{nmax} (dps={dps}, order={order})")
    values, bounds, N = _em_stieltjes(nmax, dps, order)
    check, _, N2 = _em_stieltjes(nmax, 2 * dps, order + 4, N=2000)

    gamma, budget = [], []
    floor = 10.0 ** (-(dps - 5))
    for n in range(nmax + 1):
        diff = abs(values[n] - check[n])
        gamma.append(float(values[n]))
        budget.append(float(bounds[n] + diff) + floor)

    logger.info(f"Stieltjes constants done, head length {N}, max budget {max(budget):.2e}")
    return StieltjesTable(
        kmax=nmax,
        gamma=gamma,
        err_budget=budget,
        provenance={"method": "euler-maclaurin", "N": N, "checkN": N2,
                    "order": order, "dps": dps},
    )


def load_constants(cache=None, recompute: bool = False) -> StieltjesTable:
    """The stored Stieltjes table, read from (or written to) ``cache``."""
    from sieve_cache import SieveCache
    cache = cache or SieveCache()
    key = str(cache.cache_dir)
    if key in _memo and not recompute:
        return _memo[key]

    table = None
    if not recompute:
        data = cache.load_json(STIELTJES_FILE)
        if data and int(data.get("kmax", -1)) >= STIELTJES_STORED:
            table = StieltjesTable.from_dict(data)
            logger.debug(f"Loaded Stieltjes constants from {cache.cache_dir}")
    if table is None:
        # Another cache directory may already hold the same constants.
        table = next(iter(_memo.values())) if _memo and not recompute \
            else compute_stieltjes(STIELTJES_STORED)
        cache.save_json(STIELTJES_FILE, table.to_dict())
    _memo[key] = table
    return table


def stieltjes(kmax: int, recompute: bool = False, cache=None) -> StieltjesTable:
    """Stieltjes constants gamma_0..gamma_kmax (standard normalisation)."""
    if not 0 <= kmax <= STIELTJES_KMAX:
        raise UnsupportedError(f"kmax={kmax} outside [0, {STIELTJES_KMAX}]")
    return load_constants(cache, recompute).truncated(kmax)


# ---------------------------------------------------------------------------
# Laurent series
# ---------------------------------------------------------------------------

class LaurentSeries:
    """Truncated Laurent series in u = s - 1.

    ``coeffs[i]`` multiplies u^(low + i); coefficients are exact through
    u^high and unknown beyond.
    """

    def __init__(self, low: int, coeffs, high: Optional[int] = None):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if high is None:
            high = low + coeffs.size - 1
        self.low = int(low)
        self.high = int(high)
        self.coeffs = coeffs[:max(self.high - self.low + 1, 0)]

    def coefficient(self, power: int) -> float:
        if power < self.low:
            return 0.0
        if power > self.high:
            raise ValueError(f"u^{power} lies beyond the truncation u^{self.high}")
        return float(self.coeffs[power - self.low])

    def truncate(self, high: int) -> "LaurentSeries":
        return LaurentSeries(self.low, self.coeffs, min(high, self.high))

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        low = self.low + other.low
        high = min(self.high + other.low, other.high + self.low)
        prod = np.convolve(self.coeffs, other.coeffs)
        return LaurentSeries(low, prod, high)

    def __pow__(self, k: int) -> "LaurentSeries":
        result = self
        for _ in range(k - 1):
            result = result * self
        return result

    def as_dict(self) -> dict:
        return {p: self.coefficient(p) for p in range(self.low, self.high + 1)}

    def __repr__(self):
        return f"LaurentSeries(low={self.low}, high={self.high})"


def laurent_mul(a: LaurentSeries, b: LaurentSeries, order: Optional[int] = None) -> LaurentSeries:
    """Truncated product; ``order`` caps the highest kept power."""
    product = a * b
    return product if order is None else product.truncate(order)


def zeta_laurent_series(order: int, constants: Optional[StieltjesTable] = None) -> LaurentSeries:
    """zeta(s) = 1/u + sum_j (-1)^j gamma_j / j! u^j, exact through u^order."""
    if order < 0:
        return LaurentSeries(-1, [1.0], -1)
    constants = constants or load_constants()
    if order > constants.kmax:
        raise UnsupportedError(f"Laurent order {order} needs more than {constants.kmax} constants")
    c = constants.laurent_coefficients(order + 1)
    return LaurentSeries(-1, np.concatenate(([1.0], c)), order)


def zeta_laurent_pow(k: int, m: int, constants: Optional[StieltjesTable] = None) -> LaurentSeries:
    """Laurent coefficients of zeta^k about s = 1 from u^-k through u^m."""
    if k < 1:
        raise UnsupportedError("k must be at least 1")
    if m > LAURENT_MAX_ORDER:
        raise UnsupportedError(f"expansion order {m} above {LAURENT_MAX_ORDER}")
    if m < -k:
        raise UnsupportedError(f"expansion order {m} below the pole order -{k}")
    # k factors each starting at u^-1 lose k-1 orders of validity.
    base = zeta_laurent_series(m + k - 1, constants)
    return base ** k


# ---------------------------------------------------------------------------
# Main term
# ---------------------------------------------------------------------------

def main_term_poly(k: int, constants: Optional[StieltjesTable] = None) -> MainTermModel:
    """P_{k-1} from the residue of zeta^k(s) x^s / s at s = 1.

    x^s / s = x e^{uL} / (1 + u) with L = log x; the u^i coefficient of
    e^{uL}/(1+u) is sum_{a<=i} (-1)^{i-a} L^a / a!.
    """
    if not 1 <= k <= MAINTERM_KMAX:
        raise UnsupportedError(f"k={k} outside [1, {MAINTERM_KMAX}]")

    series = zeta_laurent_pow(k, -1, constants)
    coeffs = []
    for a in range(k):
        total = 0.0
        for i in range(a, k):
            total += series.coefficient(-1 - i) * (-1) ** (i - a)
        coeffs.append(total / math.factorial(a))

    used = constants or load_constants()
    return MainTermModel(
        k=k,
        coeffs=coeffs,
        zeta_k0=(-0.5) ** k,
        provenance={"method": "laurent-residue", "stieltjes": used.provenance},
    )


def residue_by_contour(f: Callable[[np.ndarray], np.ndarray], center: complex,
                       radius: float, nodes: int = 2048) -> complex:
    """(2 pi i)^-1 times the circle integral of f, by the trapezoid rule."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    w = radius * np.exp(1j * theta)
    values = f(center + w) * w
    return csum(values) / nodes


def main_term_by_contour(k: int, x: float, radius: float = 0.25, nodes: int = 2048) -> float:
    """x P_{k-1}(log x) as Res_{s=1} zeta^k(s) x^s / s on a circle about 1."""
    from zeta import zeta_values

    def integrand(s):
        z, _ = zeta_values(s)
        return z ** k * np.exp(s * math.log(x)) / s

    return residue_by_contour(integrand, 1.0, radius, nodes).real

"""
Perron inversion, the Mellin transforms K_k(s) of Delta_k^2, the Laplace
transform of Delta^2 and the Parseval partial integrals.

All transforms of Delta_k^2 run through the panel integrator, so they are
closed-form on every panel; only the t-integrals are quadratures.
"""

import logging
import math
import time
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate

from arith_core import (ExpWeight, PanelIntegrator, PowerWeight, delta_k, fine_for,
                        sieve_dk)
from asymptotics import A1
from compensated import fsum
from error_logger import DomainError, CapacityError, PoleError, QuadratureError, UnsupportedError
from mainterm import main_term_poly
from models import AsymptoticConstants, DivisorTable, MainTermModel, MellinMethod, MellinValue
from zeta import IM_CEILING, zeta_values


logger = logging.getLogger(__name__)

POLE_EXCLUSION = 1.0e-3
STRIP_MARGIN = 0.25
QUAD_DEPTH = 12
QUAD_BATCH = 256
SCAN_POINTS = 64
MAJORANT_MARGIN = 1.5
K3_GROWTH = 14.0 / 9.0 + 0.05
LAPLACE_TAIL = 1.0e-12
LAPLACE_COLUMNS = ["T", "lhs", "leading", "residual", "ratio", "known", "known_ratio"]


# ---------------------------------------------------------------------------
# Oscillatory t-integrals
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def oscillatory_integral(f: Callable[[np.ndarray], np.ndarray], T: float, log_y: float,
                         tol: float = 1.0e-9, max_depth: int = QUAD_DEPTH) -> Tuple[float, float]:
    """Integral of f over [0, T] by adaptive Gauss-Legendre panels.

    Initial panels are no longer than min(pi / |log y|, 1), i.e. at most half
    an oscillation of y^{it}. A panel is accepted when the 12- and 24-node
    rules agree to tol scaled by the panel length.
    """
    length = min(math.pi / abs(log_y), 1.0) if log_y != 0.0 else 1.0
    count = max(1, int(math.ceil(T / length)))
    edges = np.linspace(0.0, T, count + 1)
    pending = [(edges[:-1], edges[1:], 0)]
    x12, w12 = _gauss_legendre(12)
    x24, w24 = _gauss_legendre(24)

    starts, values, errors = [], [], []
    while pending:
        a_all, b_all, depth = pending.pop()
        for lo in range(0, a_all.size, QUAD_BATCH):
            a = a_all[lo:lo + QUAD_BATCH]
            b = b_all[lo:lo + QUAD_BATCH]
            mid = 0.5 * (a + b)
            half = 0.5 * (b - a)
            nodes = np.concatenate([(mid[:, None] + half[:, None] * x12).ravel(),
                                    (mid[:, None] + half[:, None] * x24).ravel()])
            vals = f(nodes)
            v12 = vals[:a.size * 12].reshape(a.size, 12)
            v24 = vals[a.size * 12:].reshape(a.size, 24)
            g12 = half * (v12 @ w12)
            g24 = half * (v24 @ w24)
            err = np.abs(g24 - g12)
            ok = err <= np.maximum(tol * (b - a) / T, 1.0e-13 * np.abs(g24))

            starts.append(a[ok])
            values.append(g24[ok])
            errors.append(err[ok])
            if np.any(~ok):
                if depth >= max_depth:
                    raise QuadratureError(f"adaptive quadrature did not converge near t={a[~ok][0]:.6g}")
                am, bm, mm = a[~ok], b[~ok], mid[~ok]
                pending.append((np.concatenate([am, mm]), np.concatenate([mm, bm]), depth + 1))

    starts = np.concatenate(starts)
    order = np.argsort(starts, kind="stable")
    return fsum(np.concatenate(values)[order]), fsum(np.concatenate(errors))


def perron_kernel(y: float, c: float, T: float) -> float:
    """(2 pi i)^{-1} times the integral of y^s / s over c - iT .. c + iT."""
    if y <= 0:
        raise DomainError("y must be positive")
    log_y = math.log(y)

    def f(t):
        s = c + 1j * t
        return (np.exp(s * log_y) / s).real

    value, _ = oscillatory_integral(f, T, log_y)
    return value / math.pi


def perron_delta(k: int, x: float, c: float, T: float,
                 table: Optional[DivisorTable] = None,
                 model: Optional[MainTermModel] = None) -> Tuple[float, float]:
    """(approx, exact): truncated Perron integral minus zeta^k(0), and Delta_k(x)."""
    if x < 2.0:
        raise DomainError("x must be at least 2")
    if float(x).is_integer():
        raise DomainError("Perron inversion needs non-integer x (kernel jump)")
    if not 0.0 < c < 1.0:
        raise DomainError("c must lie in (0, 1)")
    if T < 10.0:
        raise DomainError("T must be at least 10")
    if T > IM_CEILING:
        raise DomainError(f"T above the zeta evaluation ceiling {IM_CEILING:g}")

    model = model or main_term_poly(k)
    if table is None:
        table = sieve_dk(k, int(math.ceil(x)))
    log_x = math.log(x)

    def f(t):
        s = c + 1j * t
        z, _ = zeta_values(s)
        return (z ** k * np.exp(s * log_x) / s).real

    started = time.perf_counter()
    value, err = oscillatory_integral(f, T, log_x)
    approx = value / math.pi - model.zeta_k0
    exact = delta_k(table, model, x)
    logger.info(f"Perron k={k} x={x} c={c} T={T:g}: approx={approx:.10g} exact={exact:.10g} "
                f"(quadrature err {err / math.pi:.2e}, {time.perf_counter() - started:.1f}s)")
    return approx, exact


# ---------------------------------------------------------------------------
# Remainder models for K_2 and K_3
# ---------------------------------------------------------------------------

def _constants(constants: Optional[AsymptoticConstants], k: int) -> AsymptoticConstants:
    if constants is not None and (k == 2 or constants.C3 is not None):
        return constants
    from asymptotics import const_A_B, const_C3
    A, B = const_A_B()
    return AsymptoticConstants(A=A, B=B, C3=const_C3() if k == 3 else None)


class _Growth:
    """Main term coefficient * x^exponent of I2 and a majorant for the remainder."""

    def __init__(self, k: int, constants: AsymptoticConstants):
        if k == 2:
            self.coefficient, self.exponent = constants.A, 1.5
        elif k == 3:
            self.coefficient, self.exponent = constants.C3, 5.0 / 3.0
        else:
            raise UnsupportedError("K_k(s) is provided for k = 2 and k = 3")
        self.k = k
        self.pole = self.exponent

    def shape(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.k == 2:
            return x * (1.0 + np.log(x)) ** 4
        return x ** K3_GROWTH

    def tail_integral(self, X: float, sigma: float) -> float:
        """Integral over [X, inf) of shape(x) x^{-sigma-1}."""
        if self.k == 2:
            beta = sigma - 1.0
            if beta <= 0:
                return math.inf
            u = 1.0 + math.log(X)
            total = sum(math.factorial(4) / math.factorial(4 - j) * u ** (4 - j) / beta ** (j + 1)
                        for j in range(5))
            return X ** (-beta) * total
        gap = sigma - K3_GROWTH
        if gap <= 0:
            return math.inf
        return X ** (-gap) / gap

    def measured_constant(self, integrator: PanelIntegrator) -> float:
        X = integrator.end
        grid = np.geomspace(max(1.0, X / 10.0), X, SCAN_POINTS)
        remainder = integrator.integral(grid, "I2") - self.coefficient * grid ** self.exponent
        return MAJORANT_MARGIN * float(np.max(np.abs(remainder) / self.shape(grid)))


def make_integrator(table: DivisorTable, model: MainTermModel, X: Optional[float] = None,
                    s_abs: float = 2.0, workers: int = 1) -> PanelIntegrator:
    """Integrator whose panels suit u^{-s} weights up to |s| = s_abs."""
    return PanelIntegrator(table, model, X, fine=fine_for(s_abs + 1.0), workers=workers)


def _check_pole(growth: _Growth, s: complex):
    if abs(s - growth.pole) < POLE_EXCLUSION:
        raise PoleError(f"s={s} lies within {POLE_EXCLUSION:g} of the pole {growth.pole:.6g}")


def mellin_K_direct(integrator: PanelIntegrator, s, constants: Optional[AsymptoticConstants] = None,
                    tail_closure: bool = True) -> MellinValue:
    """K_k(s) from the integral of Delta_k^2 x^{-s} over [1, X].

    With ``tail_closure`` the main-term tail beyond X is added in closed
    form and the budget covers only the remainder tail; without it the raw
    truncated transform is returned.
    """
    s = complex(s)
    k = integrator.table.k
    constants = _constants(constants, k)
    growth = _Growth(k, constants)
    if s.real < growth.exponent + STRIP_MARGIN:
        raise DomainError(f"Re s = {s.real} too small for the direct transform "
                          f"(needs >= {growth.exponent + STRIP_MARGIN:.6g})")

    X = integrator.end
    raw = complex(integrator.weighted(2, [PowerWeight(s)])[0])
    c = growth.measured_constant(integrator)
    budget = abs(s) * c * growth.tail_integral(X, s.real)

    I2X = integrator.total("I2")
    remainder_X = I2X - growth.coefficient * X ** growth.exponent
    closure = (growth.exponent * growth.coefficient * X ** (growth.exponent - s) / (s - growth.exponent)
               - remainder_X * X ** (-s))
    if tail_closure:
        value = raw + closure
    else:
        value = raw
        budget += abs(closure)
    logger.debug(f"K_{k}({s}) direct over [1, {X:g}]: {value} (budget {budget:.2e})")
    return MellinValue(k=k, s=s, value=value, method=MellinMethod.DIRECT, truncation_budget=budget)


def mellin_continued(integrator: PanelIntegrator, s, constants: Optional[AsymptoticConstants] = None
                     ) -> MellinValue:
    """Continued K_k(s): principal part + boundary constant + s * remainder transform."""
    s = complex(s)
    k = integrator.table.k
    constants = _constants(constants, k)
    growth = _Growth(k, constants)
    floor = (1.0 if k == 2 else 14.0 / 9.0) + POLE_EXCLUSION
    if s.real <= floor:
        raise DomainError(f"Re s = {s.real} outside the continuation strip Re s > {floor:.6g}")
    _check_pole(growth, s)

    coef, e = growth.coefficient, growth.exponent
    principal = e * coef / (s - e) + coef
    tail = complex(integrator.remainder_weighted(coef, e, [PowerWeight(s + 1.0)])[0])
    c = growth.measured_constant(integrator)
    budget = abs(s) * c * growth.tail_integral(integrator.end, s.real)
    method = MellinMethod.CONTINUED_K2 if k == 2 else MellinMethod.CONTINUED_K3
    return MellinValue(k=k, s=s, value=principal + s * tail, method=method,
                       truncation_budget=budget)


def mellin_K2_continued(integrator: PanelIntegrator, s,
                        constants: Optional[AsymptoticConstants] = None) -> MellinValue:
    if integrator.table.k != 2:
        raise DomainError("K_2 needs a k = 2 integrator")
    return mellin_continued(integrator, s, constants)


def mellin_K3_continued(integrator: PanelIntegrator, s,
                        constants: Optional[AsymptoticConstants] = None) -> MellinValue:
    if integrator.table.k != 3:
        raise DomainError("K_3 needs a k = 3 integrator")
    return mellin_continued(integrator, s, constants)


def _symmetric_residue(integrator: PanelIntegrator, p: float, eps: float,
                       constants: AsymptoticConstants) -> float:
    left = mellin_continued(integrator, p - eps, constants)
    right = mellin_continued(integrator, p + eps, constants)
    return 0.5 * ((-eps) * left.value + eps * right.value).real


def pole_residue_estimate(integrator: PanelIntegrator, eps: float = 1.0e-2,
                          constants: Optional[AsymptoticConstants] = None,
                          extrapolate: bool = True) -> Tuple[float, float]:
    """(estimate, expected) for the residue of K_k at its pole.

    Averaging (s - p) K(s) at s = p - eps and p + eps leaves eps^2 g'(p),
    g(s) = s times the remainder integral. For k = 3 that term is of order
    eps^2 log^2 X, so by default a second pair at 2 eps removes it.
    """
    k = integrator.table.k
    constants = _constants(constants, k)
    growth = _Growth(k, constants)
    p = growth.pole
    estimate = _symmetric_residue(integrator, p, eps, constants)
    if extrapolate:
        wide = _symmetric_residue(integrator, p, 2.0 * eps, constants)
        logger.debug(f"Residue at {p:.6g}: eps {estimate:.10g}, 2 eps {wide:.10g}")
        estimate = (4.0 * estimate - wide) / 3.0
    return estimate, growth.exponent * growth.coefficient


# ---------------------------------------------------------------------------
# Parseval
# ---------------------------------------------------------------------------

def parseval_bound(integrator: PanelIntegrator, sigma: float, full: bool = False) -> float:
    """Integral of Delta^4 x^{1 - 2 sigma} over [1, X] (plus the tail beyond X if full)."""
    value = float(integrator.weighted(4, [PowerWeight(2.0 * sigma - 1.0)])[0].real)
    if full:
        X = integrator.end
        C = integrator.total("I4") / X ** 2
        value += 2.0 * C * X ** (3.0 - 2.0 * sigma) / (2.0 * sigma - 3.0)
    return value


def parseval_partial(integrator: PanelIntegrator, sigma: float, Tmax: float,
                     dt: float = 0.02) -> pd.DataFrame:
    """(1 / 2 pi) * integral over [-T, T] of |K_2^X(sigma + it)|^2, for T up to Tmax."""
    if integrator.table.k != 2:
        raise DomainError("Parseval partial integrals are for k = 2")
    if sigma < 1.6:
        raise DomainError("sigma must be at least 1.6")
    ts = np.arange(0.0, Tmax + 0.5 * dt, dt)
    needed = fine_for(abs(complex(sigma, Tmax)))
    if integrator.fine < needed:
        raise DomainError(f"integrator panels too coarse for |s| up to {abs(complex(sigma, Tmax)):.3g}; "
                          f"build it with make_integrator(..., s_abs={Tmax:g})")

    started = time.perf_counter()
    K = integrator.weighted(2, [PowerWeight(complex(sigma, t)) for t in ts])
    partial = integrate.cumulative_trapezoid(np.abs(K) ** 2, ts, initial=0.0) / math.pi
    logger.info(f"Parseval sigma={sigma} over {ts.size} t-values in {time.perf_counter() - started:.1f}s")
    return pd.DataFrame({"T": ts, "partial": partial})


# ---------------------------------------------------------------------------
# Laplace transform
# ---------------------------------------------------------------------------

def laplace_cutoff(T: float, leading: float) -> float:
    """x with T (x + T) e^{-x/T} below LAPLACE_TAIL * leading, from Delta^2 <= x."""
    cut = 30.0 * T
    for _ in range(50):
        new = T * math.log(T * (cut + T) / (LAPLACE_TAIL * leading))
        if abs(new - cut) <= 1e-9 * cut:
            break
        cut = new
    return cut


def _laplace_head(model: MainTermModel, T: float) -> float:
    """Integral over [0, 1] where the summatory part vanishes."""
    def f(x):
        if x == 0.0:
            return model.zeta_k0 ** 2
        d = -x * float(model.poly(math.log(x))) - model.zeta_k0
        return d * d * math.exp(-x / T)
    value, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return value


def laplace_values(table: DivisorTable, model: MainTermModel, Ts: Sequence[float],
                   constants: Optional[AsymptoticConstants] = None,
                   workers: int = 1) -> pd.DataFrame:
    """lhs, leading (B/8)(T/pi)^{3/2} and residual for each T.

    ``known`` adds the T log^2 T term to the leading one; at moderate T the
    lower-order terms still hold lhs a few percent under the leading term
    alone, so ``known_ratio`` is the one to hold against unity.
    """
    if table.k != 2:
        raise DomainError("the Laplace formula is for k = 2")
    Ts = [float(T) for T in Ts]
    if any(T < 10.0 for T in Ts):
        raise DomainError("T must be at least 10")
    constants = _constants(constants, 2)

    leading = [constants.B / 8.0 * (T / math.pi) ** 1.5 for T in Ts]
    cut = max(laplace_cutoff(T, lead) for T, lead in zip(Ts, leading))
    if cut > table.limit:
        raise CapacityError(f"Laplace cutoff {cut:.4g} exceeds the sieve limit {table.limit}")

    integrator = PanelIntegrator(table, model, math.ceil(cut), workers=workers)
    body = integrator.weighted(2, [ExpWeight(T) for T in Ts]).real
    rows = []
    for T, lead, b in zip(Ts, leading, body):
        lhs = _laplace_head(model, T) + float(b)
        known = lead + A1 * T * math.log(T) ** 2
        rows.append({"T": T, "lhs": lhs, "leading": lead, "residual": lhs - lead,
                     "ratio": lhs / lead, "known": known, "known_ratio": lhs / known})
    return pd.DataFrame(rows, columns=LAPLACE_COLUMNS)


def laplace_check(table: DivisorTable, model: MainTermModel, T: float,
                  constants: Optional[AsymptoticConstants] = None,
                  workers: int = 1) -> Tuple[float, float, float]:
    row = laplace_values(table, model, [T], constants, workers).iloc[0]
    return float(row["lhs"]), float(row["leading"]), float(row["residual"])


def fit_laplace_residual(Ts: Sequence[float], residuals: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares (A1, A2, A3) in residual = (A1 L^2 + A2 L + A3) T, L = log T."""
    Ts = np.asarray(Ts, dtype=np.float64)
    L = np.log(Ts)
    design = np.column_stack([L ** 2, L, np.ones_like(L)])
    coeffs, *_ = np.linalg.lstsq(design, np.asarray(residuals) / Ts, rcond=None)
    return float(coeffs[0]), float(coeffs[1]), float(coeffs[2])

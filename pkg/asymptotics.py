"""
Explicit constants of the mean-square formulas, the remainder F(x) and its
fits, empirical growth exponents and the ledger of proved exponent bounds.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from arith_core import PanelIntegrator, delta_values, large_value_scan, primes_upto
from compensated import compensated_cumsum, fsum
from error_logger import (DegenerateError, DomainError, IllConditionedError,
                          UnsupportedError)
from models import (AsymptoticConstants, DivisorTable, ExponentLedger, MainTermModel,
                    RemainderProfile, SlopeReport)
from zeta import zeta_eval, zeta_values


logger = logging.getLogger(__name__)

A1 = -1.0 / (4.0 * math.pi ** 2)
MIN_SAMPLES = 8
MIN_DECADES = 2.0
SLOPE_SLACK = 0.1
CONTOUR_NODES = 2048
AVERAGING_POINTS = 64


# ---------------------------------------------------------------------------
# Ledger
# ---------------------------------------------------------------------------

def _fractions(table: Dict[int, str]) -> Dict[int, Fraction]:
    return {k: Fraction(v) for k, v in table.items()}


LEDGER = ExponentLedger(
    entries={
        "theta": _fractions({3: "1", 4: "5/4", 5: "13/10", 6: "4/3", 7: "19/14", 8: "11/8",
                             9: "145/102", 10: "29/20", 11: "157/106", 12: "3/2"}),
        "rho": _fractions({2: "5/2", 3: "3", 4: "13/4", 5: "17/5", 6: "7/2"}),
        "eta": _fractions({2: "0", 3: "1/6", 4: "1/4", 5: "3/10", 6: "1/3", 7: "5/14",
                           8: "3/8", 9: "43/102", 10: "9/20", 11: "51/106", 12: "1/2"}),
        "beta": _fractions({2: "1/4", 3: "1/3", 4: "3/8", 5: "9/20", 6: "1/2"}),
        "sigmaC": _fractions({3: "0", 4: "0", 5: "1/5", 6: "1/4"}),
        "moment4": _fractions({2: "2"}),
    },
    exact={
        "beta": {2: True, 3: True, 4: True},
        "eta": {k: True for k in range(2, 9)},
        "rho": {2: True},
        "moment4": {2: True},
    },
)

LEDGER_KINDS = ("theta", "rho", "eta", "beta", "sigmaC", "moment4")


def ledger(kind: str, k: int) -> Fraction:
    """Proved exponent bound as an exact rational."""
    if kind not in LEDGER.entries:
        raise UnsupportedError(f"unknown ledger kind {kind!r}; choose from {LEDGER_KINDS}")
    try:
        return LEDGER.get(kind, int(k))
    except KeyError:
        stored = sorted(LEDGER.entries[kind])
        raise UnsupportedError(f"{kind} is stored for k in {stored}, not k={k}") from None


def ledger_consistency(entries: ExponentLedger = LEDGER) -> List[Tuple[str, bool]]:
    """theta_{2k} <= 1 + beta_k and rho_k <= 3 + 2 beta_k on every stored pair."""
    checks = []
    for k, beta in sorted(entries.entries["beta"].items()):
        theta = entries.entries["theta"].get(2 * k)
        if theta is not None:
            checks.append((f"theta_{2 * k} <= 1 + beta_{k}", theta <= 1 + beta))
        rho = entries.entries["rho"].get(k)
        if rho is not None:
            checks.append((f"rho_{k} <= 3 + 2 beta_{k}", rho <= 3 + 2 * beta))
    return checks


def ledger_frame(entries: ExponentLedger = LEDGER) -> pd.DataFrame:
    rows = []
    for kind, table in entries.entries.items():
        for k, value in sorted(table.items()):
            rows.append({"kind": kind, "k": k, "bound": str(value), "value": float(value),
                         "equality": entries.is_equality(kind, k)})
    return pd.DataFrame(rows, columns=["kind", "k", "bound", "value", "equality"])


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

def dirichlet_tail_main(D: Callable[[np.ndarray], np.ndarray], sigma0: float, Ns,
                        radius: float = 0.25, nodes: int = CONTOUR_NODES) -> np.ndarray:
    """Main term of sum_{n>N} a_n n^{-sigma0} for each N.

    It is Res_{w=1} D(w) N^{w - sigma0} / (sigma0 - w), where D is the
    Dirichlet series of a_n with its only singularity near 1 at w = 1.
    D is evaluated once on the contour nodes.
    """
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    dw = radius * np.exp(1j * theta)
    w = 1.0 + dw
    Dw = D(w) * dw / (sigma0 - w)
    Ns = np.atleast_1d(np.asarray(Ns, dtype=np.float64))
    out = np.empty(Ns.size)
    for i, N in enumerate(Ns):
        values = Dw * np.exp((w - sigma0) * math.log(N))
        out[i] = (fsum(values.real)) / nodes
    return out


def _primed_partial_sums(terms: np.ndarray, Ns: np.ndarray) -> np.ndarray:
    cum = compensated_cumsum(terms)
    idx = Ns.astype(np.int64) - 1
    return cum[idx] - 0.5 * terms[idx]


def _averaged_direct(terms: np.ndarray, D, sigma0: float, N: int, radius: float) -> float:
    Ns = np.unique(np.round(np.linspace(N // 2, N, AVERAGING_POINTS)).astype(np.int64))
    partial = _primed_partial_sums(terms, Ns)
    tail = dirichlet_tail_main(D, sigma0, Ns, radius=radius)
    return float(np.mean(partial + tail))


def _B_series(w: np.ndarray) -> np.ndarray:
    z, _ = zeta_values(w)
    z2, _ = zeta_values(2.0 * w)
    return z ** 4 / z2


def const_B_direct(table: DivisorTable, N: Optional[int] = None) -> Tuple[float, float]:
    """Sum of d(n)^2 n^{-3/2}: partial sums plus the residue tail, with an N vs N/2 bracket."""
    if table.k != 2:
        raise DomainError("B needs a d_2 table")
    N = table.limit if N is None else int(N)
    n = np.arange(1, N + 1, dtype=np.float64)
    terms = table.values[:N].astype(np.float64) ** 2 * n ** -1.5
    full = _averaged_direct(terms, _B_series, 1.5, N, 0.25)
    half = _averaged_direct(terms, _B_series, 1.5, N // 2, 0.25)
    return full, abs(full - half)


def const_A_B(table: Optional[DivisorTable] = None) -> Tuple[float, float]:
    """(A, B) with B = zeta^4(3/2) / zeta(3) and A = B / (6 pi^2).

    With a d_2 table the direct sum is logged as a cross-check.
    """
    z = zeta_eval(1.5).value.real
    B = z ** 4 / zeta_eval(3.0).value.real
    A = B / (6.0 * math.pi ** 2)
    if table is not None:
        direct, bracket = const_B_direct(table)
        logger.info(f"B = {B:.15g} (identity), {direct:.15g} +- {bracket:.1e} (direct, N={table.limit})")
    return A, B


def euler_factor_H(w, P: int = 10 ** 6) -> np.ndarray:
    """H(w) with sum d_3(n)^2 n^{-w} = zeta^9(w) H(w).

    Local factor (1 - x)^4 (1 + 4x + x^2), x = p^{-w}, over primes up to P,
    and exp(-9 P^{1-2w} / ((2w - 1) log P)) for the rest.
    """
    w = np.atleast_1d(np.asarray(w, dtype=np.complex128))
    primes = primes_upto(int(P)).astype(np.float64)
    logp = np.log(primes)
    total = np.zeros(w.size, dtype=np.complex128)
    for lo in range(0, primes.size, 4096):
        x = np.exp(-np.outer(w, logp[lo:lo + 4096]))
        local = 4.0 * np.log1p(-x) + np.log1p(4.0 * x + x * x)
        total += local.sum(axis=1)
    total += -9.0 * np.exp((1.0 - 2.0 * w) * math.log(P)) / ((2.0 * w - 1.0) * math.log(P))
    return np.exp(total)


def _C3_series(P: int):
    def D(w):
        z, _ = zeta_values(w)
        return z ** 9 * euler_factor_H(w, P)
    return D


def const_C3(table: Optional[DivisorTable] = None, N: Optional[int] = None,
             P: int = 10 ** 5) -> float:
    """C3 = (1 / (10 pi^2)) sum d_3(n)^2 n^{-4/3}.

    Without a table the Euler-product value zeta^9(4/3) H(4/3) is used;
    with one, the direct sum plus residue tail.
    """
    if table is None:
        z = zeta_eval(4.0 / 3.0).value.real
        H = float(euler_factor_H(4.0 / 3.0, 10 ** 6)[0].real)
        return z ** 9 * H / (10.0 * math.pi ** 2)
    value, _ = const_C3_direct(table, N, P)
    return value


def const_C3_direct(table: DivisorTable, N: Optional[int] = None,
                    P: int = 10 ** 5) -> Tuple[float, float]:
    """(C3, bracket) from partial sums at N and N/2 with the residue tail."""
    if table.k != 3:
        raise DomainError("C3 needs a d_3 table")
    N = table.limit if N is None else int(N)
    n = np.arange(1, N + 1, dtype=np.float64)
    terms = table.values[:N].astype(np.float64) ** 2 * n ** (-4.0 / 3.0)
    D = _C3_series(P)
    scale = 1.0 / (10.0 * math.pi ** 2)
    full = _averaged_direct(terms, D, 4.0 / 3.0, N, 0.15) * scale
    half = _averaged_direct(terms, D, 4.0 / 3.0, N // 2, 0.15) * scale
    return full, abs(full - half)


def asymptotic_constants(table2: Optional[DivisorTable] = None,
                         table3: Optional[DivisorTable] = None) -> AsymptoticConstants:
    """A, B, C3 with budgets and the cross-checks that were available."""
    A, B = const_A_B()
    C3 = const_C3()
    budgets, checks = {}, {}
    if table2 is not None:
        direct, bracket = const_B_direct(table2)
        budgets["B"] = bracket
        budgets["A"] = bracket / (6.0 * math.pi ** 2)
        checks["B_direct"] = direct
        checks["A_direct"] = direct / (6.0 * math.pi ** 2)
        checks["A_rel_diff"] = abs(checks["A_direct"] - A) / A
    if table3 is not None:
        direct, bracket = const_C3_direct(table3)
        budgets["C3"] = bracket
        checks["C3_direct"] = direct
        checks["C3_rel_diff"] = abs(direct - C3) / C3
    return AsymptoticConstants(A=A, B=B, C3=C3, budgets=budgets, cross_checks=checks)


# ---------------------------------------------------------------------------
# Remainders and fits
# ---------------------------------------------------------------------------

def extract_remainder(integrator: PanelIntegrator, grid,
                      constants: Optional[AsymptoticConstants] = None) -> RemainderProfile:
    """F(x) = I2 - A x^{3/2} (k=2) or R(x) = I2 - C3 x^{5/3} (k=3) on ``grid``."""
    k = integrator.table.k
    if constants is None:
        A, B = const_A_B()
        constants = AsymptoticConstants(A=A, B=B, C3=const_C3() if k == 3 else None)
    if k == 2:
        coefficient, exponent = constants.A, 1.5
        shape = lambda x: x * (1.0 + np.log(x)) ** 4
    elif k == 3:
        coefficient, exponent = constants.C3, 5.0 / 3.0
        shape = lambda x: x ** (14.0 / 9.0 + 0.05)
    else:
        raise UnsupportedError("remainders are defined for k = 2 and k = 3")

    grid = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    values = integrator.integral(grid, "I2") - coefficient * grid ** exponent
    envelope = float(np.max(np.abs(values) / shape(grid)))
    return RemainderProfile(k=k, grid=grid, values=values, main_coefficient=coefficient,
                            main_exponent=exponent, envelope_constant=envelope)


def _check_span(x: np.ndarray):
    if x.size == 0 or np.log10(x.max() / x.min()) < MIN_DECADES - 1e-9:
        raise IllConditionedError(f"grid must span at least {MIN_DECADES:g} decades")


def fit_F(grid, F) -> Tuple[float, float, float]:
    """Least-squares (a, b, c) in F(x) = a x log^2 x + b x log x + c x."""
    x = np.asarray(grid, dtype=np.float64)
    _check_span(x)
    L = np.log(x)
    design = np.column_stack([L ** 2, L, np.ones_like(L)])
    if np.linalg.cond(design) > 1e12:
        raise IllConditionedError("fit design is singular")
    coeffs, *_ = np.linalg.lstsq(design, np.asarray(F, dtype=np.float64) / x, rcond=None)
    a, b, c = (float(v) for v in coeffs)
    logger.info(f"F fit: a={a:.6g} (target {A1:.6g}), b={b:.6g}, c={c:.6g}")
    return a, b, c


def fit_residual(grid, F, coeffs) -> np.ndarray:
    """G(x) = F(x) - (a log^2 x + b log x + c) x."""
    x = np.asarray(grid, dtype=np.float64)
    L = np.log(x)
    a, b, c = coeffs
    return np.asarray(F) - (a * L ** 2 + b * L + c) * x


def integrated_remainder(integrator: PanelIntegrator, grid,
                         constants: Optional[AsymptoticConstants] = None) -> np.ndarray:
    """J(x) = integral over [1, x] of F(u) = I2(u) - A u^{3/2} (k = 2)."""
    if integrator.table.k != 2:
        raise UnsupportedError("the integrated remainder is defined for k = 2")
    A = const_A_B()[0] if constants is None else constants.A
    x = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    return integrator.integral(x, "I2int") - A * (x ** 2.5 - 1.0) / 2.5


def _integrated_basis(x: np.ndarray) -> np.ndarray:
    """Integrals over [1, x] of u log^2 u, u log u and u, divided by x^2 / 2."""
    L = np.log(x)
    half = 0.5 * x * x
    return np.column_stack([(half * (L ** 2 - L + 0.5) - 0.25) / half,
                            (half * (L - 0.5) + 0.25) / half,
                            (half - 0.5) / half])


def fit_F_integrated(grid, J) -> Tuple[float, float, float]:
    """(a, b, c) of F(x) = (a log^2 x + b log x + c) x, fitted through J = integral of F.

    Pointwise F carries an O(x) oscillation that at reachable x is as large
    as the spread of the log terms; its integral is O(x^{3/2}) and drops out
    of J / x^2.
    """
    x = np.asarray(grid, dtype=np.float64)
    _check_span(x)
    design = _integrated_basis(x)
    if np.linalg.cond(design) > 1e12:
        raise IllConditionedError("fit design is singular")
    coeffs, *_ = np.linalg.lstsq(design, np.asarray(J, dtype=np.float64) / (0.5 * x * x), rcond=None)
    a, b, c = (float(v) for v in coeffs)
    logger.info(f"Integrated F fit: a={a:.6g} (target {A1:.6g}), b={b:.6g}, c={c:.6g}")
    return a, b, c


def mean_residual(grid, J, coeffs) -> np.ndarray:
    """Running mean of G over [1, x]: (J - integral of the fitted terms) / x."""
    x = np.asarray(grid, dtype=np.float64)
    fitted = _integrated_basis(x) @ np.asarray(coeffs, dtype=np.float64) * (0.5 * x * x)
    return (np.asarray(J, dtype=np.float64) - fitted) / x


def slope_loglog(x, v, model: str = "", target: float = float("nan")) -> SlopeReport:
    """Ordinary least squares of log|v| on log x with a 95% interval.

    Zero samples are dropped and counted.
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.abs(np.asarray(v, dtype=np.float64))
    keep = v > 0
    dropped = int(np.count_nonzero(~keep))
    x, v = x[keep], v[keep]
    if x.size < MIN_SAMPLES:
        raise DegenerateError(f"need {MIN_SAMPLES} nonzero samples, have {x.size}")
    _check_span(x)

    fit = stats.linregress(np.log(x), np.log(v))
    half = stats.t.ppf(0.975, x.size - 2) * fit.stderr
    window = f"[{x.min():.3g}, {x.max():.3g}]"
    return SlopeReport(model=model, window=window, estimate=float(fit.slope),
                       ci_lo=float(fit.slope - half), ci_hi=float(fit.slope + half),
                       target=target, samples=int(x.size), dropped=dropped)


def envelope_slope(x, v, model: str = "", target: float = float("nan")) -> SlopeReport:
    """Slope of the running maximum of |v|, for oscillating quantities."""
    env = np.maximum.accumulate(np.abs(np.asarray(v, dtype=np.float64)))
    return slope_loglog(x, env, model, target)


def anchored_exponent(x, values, coefficient: float) -> float:
    """Smallest e with values <= coefficient * x^e at every sample (x > 1)."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if np.any(x <= 1.0) or np.any(v <= 0):
        raise DomainError("anchored exponents need x > 1 and positive values")
    return float(np.max(np.log(v / coefficient) / np.log(x)))


def mean_square_slopes(integrator2: PanelIntegrator, integrator3: Optional[PanelIntegrator],
                       lo: float, hi: float, points: int = 32,
                       constants: Optional[AsymptoticConstants] = None) -> pd.DataFrame:
    """Slopes of I2 (k=2, 3), I4 (k=2) and the integral of I1^2 (k=2) with ledger bounds.

    Rows whose main-term constant is known also carry the anchored exponent,
    max log(I2 / C) / log x; the bound is held against that one. At sieveable x
    the k = 3 slope still sits well above 5/3 while I2 stays under C3 x^{5/3}.
    """
    grid = np.geomspace(lo, hi, points)
    if constants is None:
        A, B = const_A_B()
        C3 = const_C3() if integrator3 is not None else None
        constants = AsymptoticConstants(A=A, B=B, C3=C3)
    rows = []

    def add(report: SlopeReport, bound: Fraction, anchored: float = float("nan")):
        row = report.to_row()
        row["bound"] = float(bound)
        row["anchored"] = anchored
        measured = report.estimate if math.isnan(anchored) else anchored
        row["within_bound"] = measured <= float(bound) + SLOPE_SLACK
        rows.append(row)

    beta2 = ledger("beta", 2)
    I2 = integrator2.integral(grid, "I2")
    add(slope_loglog(grid, I2, "I2 k=2", 1.5), 1 + 2 * beta2,
        anchored_exponent(grid, I2, constants.A))
    add(slope_loglog(grid, integrator2.integral(grid, "I4"), "I4 k=2", 2.0), ledger("moment4", 2))
    add(slope_loglog(grid, integrator2.integral(grid, "I1sq"), "I1sq k=2", 2.5), ledger("rho", 2))
    if integrator3 is not None:
        I2 = integrator3.integral(grid, "I2")
        add(slope_loglog(grid, I2, "I2 k=3", 5.0 / 3.0), 1 + 2 * ledger("beta", 3),
            anchored_exponent(grid, I2, constants.C3))
        add(envelope_slope(grid, integrator3.integral(grid, "I1"), "I1 k=3", 1.0),
            ledger("theta", 3))
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# Contradiction demonstration
# ---------------------------------------------------------------------------

@dataclass
class ContradictionReport:
    alpha: float
    gap: float
    signal: bool
    frame: pd.DataFrame = field(default_factory=pd.DataFrame)


def contradiction_demo(table: DivisorTable, model: MainTermModel, alpha: float,
                       Xlist: Optional[Sequence[float]] = None,
                       constants: Optional[AsymptoticConstants] = None,
                       windows: int = 12) -> ContradictionReport:
    """Tabulate the terms bounding Delta^2(X) when F(x) = main part + O(x^alpha).

    H = X^{alpha/3}. The mechanism excludes alpha < 3/4 because then
    X^{1/2} outgrows X^{2 alpha/3} log^2 X; ``gap`` is that exponent
    difference and ``signal`` says whether it is positive.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if table.k != 2:
        raise DomainError("the demonstration is for k = 2")
    if constants is None:
        A, B = const_A_B()
        constants = AsymptoticConstants(A=A, B=B)

    if Xlist is None:
        lo = max(100.0, table.limit ** 0.5)
        scan = large_value_scan(table, model, lo, table.limit / 2.0, windows)
        Xlist = scan["x"].tolist()
    X = np.asarray(Xlist, dtype=np.float64)
    H = np.clip(X ** (alpha / 3.0), 1.0, X)
    if np.any(X + H > table.limit) or np.any(X - H < 1.0):
        raise DomainError("X +- H must stay inside [1, N]")

    integrator = PanelIntegrator(table, model, float(np.max(X + H)))

    def F(x):
        return integrator.integral(x, "I2") - constants.A * x ** 1.5

    # Right limits at integers, where the scan found the large values.
    x_eval = np.where(X == np.floor(X), np.nextafter(X, np.inf), X)
    delta = delta_values(table, model, x_eval)
    L2 = np.log(X) ** 2
    frame = pd.DataFrame({
        "X": X,
        "H": H,
        "delta_sq": delta ** 2,
        "sqrt_X": X ** 0.5,
        "local_term": (F(X + H) - F(X - H)) / H,
        "H2_log2": H ** 2 * L2,
        "H_alpha_term": X ** alpha / H,
        "ratio": X ** 0.5 / (X ** (2.0 * alpha / 3.0) * L2),
        "large": delta ** 2 > X ** 0.5,
    })
    gap = 0.5 - 2.0 * alpha / 3.0
    logger.info(f"Contradiction demo alpha={alpha}: gap {gap:+.4f}, "
                f"{int(frame['large'].sum())}/{len(frame)} large values")
    return ContradictionReport(alpha=alpha, gap=gap, signal=gap > 0, frame=frame)

"""
Core data records for divlab.

Records are immutable-by-convention containers with ``to_dict``/``from_dict``
for JSON persistence; the numeric work lives in the operation modules.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field, fields, asdict
from fractions import Fraction
from typing import Dict, List, Optional, Any

import numpy as np
import pandas as pd

from error_logger import UsageError


TOOL_VERSION = "1.0.0"


class DivisorTable:
    """Sieved values d_k(n) for 1 <= n <= limit, one fixed k.

    ``values[n - 1]`` holds d_k(n). The arrays are read-only once built.
    """

    def __init__(self, k: int, limit: int, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.int64)
        if values.shape != (limit,):
            raise ValueError(f"expected {limit} values, got {values.shape}")
        values.flags.writeable = False
        self.k = int(k)
        self.limit = int(limit)
        self.values = values
        self._prefix = None

    @property
    def prefix(self) -> np.ndarray:
        """Exact running sums, ``prefix[n - 1] = sum_{m <= n} d_k(m)``."""
        if self._prefix is None:
            prefix = np.cumsum(self.values, dtype=np.int64)
            prefix.flags.writeable = False
            self._prefix = prefix
        return self._prefix

    def __len__(self):
        return self.limit

    def __eq__(self, other):
        if not isinstance(other, DivisorTable):
            return False
        return (self.k == other.k and self.limit == other.limit
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.k, self.limit))

    def __repr__(self):
        return f"DivisorTable(k={self.k}, limit={self.limit})"


@dataclass
class StieltjesTable:
    """Standard Stieltjes constants gamma_0..gamma_kmax with absolute error budgets.

    ``gamma[n]`` is lim (sum_{m<=N} log^n m / m - log^{n+1} N / (n+1)); the
    coefficient of (s-1)^n in the Laurent series of zeta is
    (-1)^n gamma[n] / n!.
    """

    kmax: int
    gamma: List[float]
    err_budget: List[float]
    provenance: Dict[str, Any] = field(default_factory=dict)

    def laurent_coefficients(self, count: Optional[int] = None) -> np.ndarray:
        count = self.kmax + 1 if count is None else count
        return np.array([(-1) ** n * self.gamma[n] / math.factorial(n) for n in range(count)])

    def truncated(self, kmax: int) -> "StieltjesTable":
        return StieltjesTable(kmax, self.gamma[:kmax + 1], self.err_budget[:kmax + 1],
                              dict(self.provenance))

    def to_dict(self) -> dict:
        return {
            "kmax": self.kmax,
            "gamma": [repr(float(g)) for g in self.gamma],
            "errBudget": [float(e) for e in self.err_budget],
            "provenance": self.provenance,
        }

    @staticmethod
    def from_dict(data: dict) -> "StieltjesTable":
        return StieltjesTable(
            kmax=int(data["kmax"]),
            gamma=[float(g) for g in data["gamma"]],
            err_budget=[float(e) for e in data["errBudget"]],
            provenance=data.get("provenance", {}),
        )


@dataclass
class MainTermModel:
    """Residue polynomial P_{k-1} (constant term first) and zeta^k(0)."""

    k: int
    coeffs: List[float]
    zeta_k0: float
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def poly(self, u):
        """P_{k-1}(u)."""
        return np.polynomial.polynomial.polyval(u, self.coeffs)

    def evaluate(self, x):
        """Main term x * P_{k-1}(log x)."""
        x = np.asarray(x, dtype=np.float64)
        value = x * self.poly(np.log(x))
        return float(value) if value.ndim == 0 else value

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "coeffs": [float(c) for c in self.coeffs],
            "zetaK0": float(self.zeta_k0),
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def from_dict(data: dict) -> "MainTermModel":
        return MainTermModel(
            k=int(data["k"]),
            coeffs=[float(c) for c in data["coeffs"]],
            zeta_k0=float(data["zetaK0"]),
            provenance=data.get("provenance", {}),
        )


@dataclass
class ErrorTermProfile:
    """Exact samples of Delta_k and its running integrals on a grid."""

    k: int
    grid: np.ndarray
    delta: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    I4: Optional[np.ndarray] = None
    rounding_budget: float = 0.0

    COLUMNS = ["x", "delta", "I1", "I2", "I4"]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            "x": self.grid,
            "delta": self.delta,
            "I1": self.I1,
            "I2": self.I2,
        })
        frame["I4"] = self.I4 if self.I4 is not None else np.nan
        return frame[self.COLUMNS]


class SeriesVariant:
    INTEGRAL = "INTEGRAL"   # x^{3/4} and x^{1/4} series for the integral of Delta
    DELTA3 = "DELTA3"       # truncated cosine series for Delta_3, N = X^2
    GENERAL = "GENERAL"     # truncated cosine series for Delta_k

    ALL = (INTEGRAL, DELTA3, GENERAL)


@dataclass
class SeriesSpec:
    k: int
    x: float
    truncation: int
    variant: str
    X: Optional[float] = None

    def validate(self):
        if self.variant not in SeriesVariant.ALL:
            raise UsageError(f"unknown series variant {self.variant!r}")
        if self.truncation < 1:
            raise UsageError("truncation length must be at least 1")
        if self.variant == SeriesVariant.DELTA3:
            if self.X is None or not (self.X <= self.x <= 2 * self.X):
                raise UsageError(f"x={self.x} must lie in [X, 2X] for X={self.X}")
        return self


@dataclass
class SeriesValue:
    value: float
    tail_bound: float
    heuristic: bool
    spec: SeriesSpec
    exact_ref: Optional[float] = None

    @property
    def abs_err(self) -> Optional[float]:
        if self.exact_ref is None:
            return None
        return abs(self.value - self.exact_ref)

    def to_row(self) -> dict:
        return {
            "variant": self.spec.variant,
            "k": self.spec.k,
            "x": self.spec.x,
            "truncation": self.spec.truncation,
            "value": self.value,
            "tail_bound": self.tail_bound,
            "exact_ref": self.exact_ref if self.exact_ref is not None else np.nan,
            "abs_err": self.abs_err if self.exact_ref is not None else np.nan,
        }


@dataclass
class ZetaValue:
    s: complex
    value: complex
    err_budget: float
    terms: int = 0


class MellinMethod:
    DIRECT = "DIRECT"
    CONTINUED_K2 = "CONTINUED_K2"
    CONTINUED_K3 = "CONTINUED_K3"


@dataclass
class MellinValue:
    k: int
    s: complex
    value: complex
    method: str
    truncation_budget: float

    def to_row(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "re_s": self.s.real,
            "im_s": self.s.imag,
            "re_val": self.value.real,
            "im_val": self.value.imag,
            "budget": self.truncation_budget,
        }


@dataclass
class AsymptoticConstants:
    A: float
    B: float
    C3: Optional[float] = None
    A1: float = -1.0 / (4.0 * math.pi ** 2)
    budgets: Dict[str, float] = field(default_factory=dict)
    cross_checks: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RemainderProfile:
    """F(x) = I2 - A x^{3/2} (k=2) or R(x) = I2 - C3 x^{5/3} (k=3)."""

    k: int
    grid: np.ndarray
    values: np.ndarray
    main_coefficient: float
    main_exponent: float
    envelope_constant: float = float("nan")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.grid, "remainder": self.values})


@dataclass
class SlopeReport:
    model: str
    window: str
    estimate: float
    ci_lo: float
    ci_hi: float
    target: float = float("nan")
    samples: int = 0
    dropped: int = 0

    def to_row(self) -> dict:
        return {
            "model": self.model,
            "window": self.window,
            "estimate": self.estimate,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "target": self.target,
        }


@dataclass
class ExponentLedger:
    """Proved exponent bounds stored as exact rationals, keyed by kind then k."""

    entries: Dict[str, Dict[int, Fraction]]
    exact: Dict[str, Dict[int, bool]] = field(default_factory=dict)

    def get(self, kind: str, k: int) -> Fraction:
        return self.entries[kind][k]

    def is_equality(self, kind: str, k: int) -> bool:
        return self.exact.get(kind, {}).get(k, False)

    def to_dict(self) -> dict:
        return {
            kind: {str(k): str(v) for k, v in sorted(table.items())}
            for kind, table in self.entries.items()
        }

    @staticmethod
    def from_dict(data: dict) -> "ExponentLedger":
        return ExponentLedger({
            kind: {int(k): Fraction(v) for k, v in table.items()}
            for kind, table in data.items()
        })


COMMANDS = ("sieve", "delta", "integrals", "voronoi", "perron", "mellin",
            "laplace", "constants", "fit", "ledger", "verify", "cache")

# Keys that do not change numeric output.
_HASH_EXCLUDED = {"threads", "output", "fmt", "log_dir", "log_level", "cache_dir"}


@dataclass
class RunConfig:
    """Every setting a subcommand can read; defaults < config file < flags."""

    command: str = "verify"
    k: int = 2
    N: int = 10_000_000
    start: float = 1.0e4
    stop: float = 1.0e6
    points: int = 32
    spacing: str = "geometric"
    truncation: Optional[int] = None
    output: Optional[str] = None
    fmt: str = "csv"
    seed: int = 20240601
    threads: int = 1
    x: Optional[float] = None
    X: Optional[float] = None
    H: Optional[float] = None
    s: Optional[str] = None
    c: float = 0.9
    T: Optional[float] = None
    sigma: float = 1.8
    alpha: float = 0.6
    variant: str = SeriesVariant.GENERAL
    powers: str = "1,2"
    kind: Optional[str] = None
    method: str = "direct"
    log_dir: Optional[str] = None
    log_level: str = "INFO"
    cache_dir: Optional[str] = None
    recompute_stieltjes: bool = False
    quick: bool = False

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.k < 1:
            raise UsageError("k must be at least 1")
        if self.N < 1:
            raise UsageError("N must be at least 1")
        if self.start < 1:
            raise UsageError("grid start must be >= 1")
        if self.stop < self.start:
            raise UsageError("grid stop must be >= start")
        if self.points < 1:
            raise UsageError("grid needs at least one point")
        if self.spacing not in ("linear", "geometric"):
            raise UsageError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "geometric" and self.start <= 0:
            raise UsageError("geometric spacing requires start > 0")
        if self.threads < 1:
            raise UsageError("thread count must be >= 1")
        if self.fmt not in ("csv", "json", "xlsx"):
            raise UsageError(f"unknown format {self.fmt!r}")
        return self

    def grid(self) -> np.ndarray:
        if self.points == 1:
            return np.array([float(self.start)])
        if self.spacing == "linear":
            return np.linspace(self.start, self.stop, self.points)
        return np.geomspace(self.start, self.stop, self.points)

    def complex_s(self) -> complex:
        if self.s is None:
            raise UsageError("--s is required")
        try:
            return complex(self.s.replace(" ", "").replace("i", "j"))
        except ValueError as e:
            raise UsageError(f"cannot parse s={self.s!r}") from e

    def power_list(self) -> List[int]:
        try:
            return [int(p) for p in str(self.powers).split(",") if p.strip()]
        except ValueError as e:
            raise UsageError(f"cannot parse powers={self.powers!r}") from e

    def update(self, values: Dict[str, Any]) -> "RunConfig":
        """Apply string or typed overrides; keys may use '-' or '_'."""
        types = {f.name: f.type for f in fields(self)}
        for raw_key, raw_value in values.items():
            key = raw_key.replace("-", "_")
            if key == "format":
                key = "fmt"
            if key not in types:
                raise UsageError(f"unknown configuration key {raw_key!r}")
            if raw_value is None:
                continue
            setattr(self, key, _coerce(key, raw_value, getattr(self, key)))
        return self

    def hash(self) -> str:
        payload = {f.name: getattr(self, f.name) for f in fields(self)
                   if f.name not in _HASH_EXCLUDED}
        text = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        return asdict(self)


_INT_KEYS = {"k", "N", "points", "truncation", "seed", "threads"}
_FLOAT_KEYS = {"start", "stop", "x", "X", "H", "c", "T", "sigma", "alpha"}
_BOOL_KEYS = {"recompute_stieltjes", "quick"}


def _coerce(key, value, current):
    if not isinstance(value, str):
        return value
    text = value.strip()
    try:
        if key in _INT_KEYS:
            return int(float(text)) if "e" in text.lower() else int(text)
        if key in _FLOAT_KEYS:
            return float(text)
    except ValueError as e:
        raise UsageError(f"bad value for {key}: {value!r}") from e
    if key in _BOOL_KEYS:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"bad boolean for {key}: {value!r}")
    return text

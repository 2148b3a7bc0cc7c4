"""
divlab - command-line entry point.

Parses flags (defaults < config file < command line), dispatches to the
subcommand handlers and maps errors onto exit codes.
"""

import argparse
import logging
import math
import sys
from typing import List, Optional

import numpy as np
import pandas as pd

from error_logger import DivlabError, ErrorHandler, UsageError, log_exception, setup_logging
from models import COMMANDS, RunConfig, SeriesVariant, TOOL_VERSION
from utils import load_config_file, write_result


logger = logging.getLogger("divlab")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="flat key=value configuration file")
    common.add_argument("--k", type=int, help="divisor order")
    common.add_argument("--N", type=lambda v: int(float(v)), help="sieve limit")
    common.add_argument("--start", type=float, help="grid start")
    common.add_argument("--stop", type=float, help="grid stop")
    common.add_argument("--points", type=int, help="grid points")
    common.add_argument("--spacing", choices=("linear", "geometric"))
    common.add_argument("--output", help="output file (stdout if omitted)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json", "xlsx"))
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--log-dir", dest="log_dir")
    common.add_argument("--log-level", dest="log_level")
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--recompute-stieltjes", dest="recompute_stieltjes", action="store_true")
    common.add_argument("--quick", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="divlab", parents=[common],
                                     description="Computational laboratory for the divisor problem")
    parser.add_argument("--version", action="version", version=f"divlab {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("sieve", parents=[common], help="sieve d_k and store it in the cache")

    p = sub.add_parser("delta", parents=[common], help="Delta_k at a point or on a grid")
    p.add_argument("--x", type=float)

    p = sub.add_parser("integrals", parents=[common], help="running integrals of Delta_k powers")
    p.add_argument("--powers", help="comma list from 1, 2, 4")

    p = sub.add_parser("voronoi", parents=[common], help="truncated Voronoi-type series")
    p.add_argument("--variant", choices=SeriesVariant.ALL)
    p.add_argument("--x", type=float)
    p.add_argument("--X", type=float)
    p.add_argument("--truncation", type=lambda v: int(float(v)))

    p = sub.add_parser("perron", parents=[common], help="truncated Perron inversion")
    p.add_argument("--x", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--T", type=float)

    p = sub.add_parser("mellin", parents=[common], help="K_k(s) directly or by continuation")
    p.add_argument("--s", help="complex point, e.g. 1.8 or 2+3j")
    p.add_argument("--X", type=float, help="integration limit")
    p.add_argument("--method", choices=("direct", "continued", "both"))

    p = sub.add_parser("laplace", parents=[common], help="Laplace transform of Delta^2")
    p.add_argument("--T", type=float)

    sub.add_parser("constants", parents=[common], help="A, B and C3 with cross-checks")

    p = sub.add_parser("fit", parents=[common], help="F(x) fit, growth slopes, contradiction demo")
    p.add_argument("--kind", choices=("F", "slopes", "contradiction"))
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("ledger", parents=[common], help="proved exponent bounds")
    p.add_argument("ledger_kind", nargs="?", default=None)
    p.add_argument("ledger_k", nargs="?", type=int, default=None)

    sub.add_parser("verify", parents=[common], help="acceptance suite")

    p = sub.add_parser("cache", parents=[common], help="list or clear cached tables")
    p.add_argument("action", nargs="?", choices=("list", "clear"), default="list")
    return parser


def load_config(argv: Optional[List[str]] = None):
    """(RunConfig, positional extras) with defaults < config file < flags."""
    args = build_parser().parse_args(argv)
    values = vars(args).copy()
    config = RunConfig(command=values.pop("command"))

    config_path = values.pop("config", None)
    if config_path:
        config.update(load_config_file(config_path))

    extras = {key: values.pop(key) for key in ("ledger_kind", "ledger_k", "action") if key in values}
    config.update(values)
    return config.validate(), extras


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _cache(config: RunConfig):
    from sieve_cache import SieveCache
    return SieveCache(config.cache_dir)


def _table(config: RunConfig, need: float, k: Optional[int] = None):
    """Cached d_k table just large enough for ``need`` (at most config.N)."""
    k = config.k if k is None else k
    size = int(math.ceil(need))
    if size > config.N:
        from error_logger import CapacityError
        raise CapacityError(f"request needs a sieve up to {size}, limit is N={config.N}")
    return _cache(config).load_or_build(k, max(size, 1))


def _model(config: RunConfig, k: Optional[int] = None):
    from mainterm import load_constants, main_term_poly
    constants = load_constants(_cache(config), recompute=config.recompute_stieltjes)
    return main_term_poly(config.k if k is None else k, constants)


def _points(config: RunConfig, value: Optional[float]) -> np.ndarray:
    return np.array([value]) if value is not None else config.grid()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_sieve(config, extras):
    table = _table(config, config.N)
    df = pd.DataFrame([{
        "k": table.k,
        "N": table.limit,
        "summatory": int(table.prefix[-1]),
        "max_value": int(table.values.max()),
    }])
    write_result(df, config, table.limit)
    return 0


def cmd_delta(config, extras):
    from arith_core import delta_values, summatory_values
    xs = _points(config, config.x)
    table = _table(config, xs.max())
    model = _model(config)
    df = pd.DataFrame({
        "x": xs,
        "summatory": summatory_values(table, xs),
        "delta": delta_values(table, model, xs),
    })
    write_result(df, config, table.limit)
    return 0


def cmd_integrals(config, extras):
    from arith_core import build_profile
    grid = config.grid()
    table = _table(config, grid.max())
    profile = build_profile(table, _model(config), grid, config.power_list(), config.threads)
    write_result(profile.to_frame(), config, table.limit,
                 rounding_budget=f"{profile.rounding_budget:.3e}")
    return 0


def cmd_voronoi(config, extras):
    from arith_core import PanelIntegrator, delta_k
    from voronoi_series import jump_reach, voronoi_delta3, voronoi_delta_k, voronoi_integral_delta

    variant = config.variant
    xs = _points(config, config.x)
    rows = []
    if variant == SeriesVariant.INTEGRAL:
        M = config.truncation or 10_000
        reach = xs.max() + jump_reach(xs.max(), M) + 1.0
        table = _table(config, max(M, reach), k=2)
        integrator = PanelIntegrator(table, _model(config, 2), xs.max())
        for x in xs:
            exact = float(integrator.integral(x, "I1")[0])
            rows.append(voronoi_integral_delta(table, x, M, exact, config.threads).to_row())
    elif variant == SeriesVariant.DELTA3:
        X = config.X if config.X is not None else float(xs.min())
        N = config.truncation or int(X * X)
        table = _table(config, max(N, xs.max()), k=3)
        model = _model(config, 3)
        for x in xs:
            rows.append(voronoi_delta3(table, x, X, N, delta_k(table, model, x),
                                       config.threads).to_row())
    else:
        N = config.truncation or 100_000
        table = _table(config, max(N, xs.max()))
        model = _model(config)
        for x in xs:
            rows.append(voronoi_delta_k(table, x, N, config.k, delta_k(table, model, x),
                                        config.threads).to_row())
    write_result(pd.DataFrame(rows), config, table.limit)
    return 0


def cmd_perron(config, extras):
    from mellin import perron_delta
    if config.x is None:
        raise UsageError("perron needs --x")
    T = config.T if config.T is not None else 1.0e3
    table = _table(config, config.x)
    approx, exact = perron_delta(config.k, config.x, config.c, T, table, _model(config))
    df = pd.DataFrame([{"k": config.k, "x": config.x, "c": config.c, "T": T,
                        "approx": approx, "exact": exact, "abs_err": abs(approx - exact)}])
    write_result(df, config, table.limit)
    return 0


def cmd_mellin(config, extras):
    from mellin import make_integrator, mellin_K_direct, mellin_continued
    from asymptotics import asymptotic_constants

    s = config.complex_s()
    X = config.X if config.X is not None else float(config.N)
    table = _table(config, X)
    integrator = make_integrator(table, _model(config), X, abs(s), config.threads)
    constants = asymptotic_constants()
    rows = []
    if config.method in ("direct", "both"):
        rows.append(mellin_K_direct(integrator, s, constants).to_row())
    if config.method in ("continued", "both"):
        rows.append(mellin_continued(integrator, s, constants).to_row())
    write_result(pd.DataFrame(rows), config, table.limit)
    return 0


def cmd_laplace(config, extras):
    from asymptotics import const_A_B
    from mellin import fit_laplace_residual, laplace_cutoff, laplace_values
    Ts = _points(config, config.T)
    _, B = const_A_B()
    cut = laplace_cutoff(float(Ts.max()), B / 8.0 * (Ts.max() / math.pi) ** 1.5)
    table = _table(config, cut + 1.0, k=2)
    df = laplace_values(table, _model(config, 2), Ts, workers=config.threads)
    extra = {}
    if len(df) >= 3:
        A1, A2, A3 = fit_laplace_residual(df["T"], df["residual"])
        extra = {"fit_A1": repr(A1), "fit_A2": repr(A2), "fit_A3": repr(A3)}
    write_result(df, config, table.limit, **extra)
    return 0


def cmd_constants(config, extras):
    from asymptotics import asymptotic_constants
    table2 = _table(config, config.N, k=2)
    table3 = _table(config, config.N, k=3)
    constants = asymptotic_constants(table2, table3)
    rows = [{"name": name, "value": getattr(constants, name),
             "budget": constants.budgets.get(name, float("nan"))}
            for name in ("A", "B", "C3", "A1")]
    rows += [{"name": name, "value": value, "budget": float("nan")}
             for name, value in constants.cross_checks.items()]
    write_result(pd.DataFrame(rows), config, config.N, json_data=constants.to_dict())
    return 0


def cmd_fit(config, extras):
    from arith_core import PanelIntegrator
    from asymptotics import (A1, contradiction_demo, envelope_slope, extract_remainder, fit_F,
                             fit_F_integrated, fit_residual, integrated_remainder,
                             mean_residual, mean_square_slopes)
    kind = config.kind or "F"
    grid = config.grid()

    if kind == "contradiction":
        table = _table(config, config.N, k=2)
        report = contradiction_demo(table, _model(config, 2), config.alpha)
        write_result(report.frame, config, table.limit, alpha=report.alpha,
                     gap=f"{report.gap:.6f}", signal=report.signal)
        return 0

    table2 = _table(config, grid.max(), k=2)
    integrator2 = PanelIntegrator(table2, _model(config, 2), grid.max(), workers=config.threads)
    if kind == "slopes":
        table3 = _table(config, grid.max(), k=3)
        integrator3 = PanelIntegrator(table3, _model(config, 3), grid.max(), workers=config.threads)
        df = mean_square_slopes(integrator2, integrator3, grid.min(), grid.max(), config.points)
        write_result(df, config, table2.limit)
        return 0

    profile = extract_remainder(integrator2, grid)
    coeffs = fit_F(grid, profile.values)
    G = fit_residual(grid, profile.values, coeffs)
    slope = envelope_slope(grid, G, "G envelope")
    J = integrated_remainder(integrator2, grid)
    averaged = fit_F_integrated(grid, J)
    mean_slope = envelope_slope(grid, mean_residual(grid, J, averaged), "mean G envelope")
    rows = []
    for fit, fitted, G_slope in (("pointwise", coeffs, slope), ("integrated", averaged, mean_slope)):
        rows += [
            {"fit": fit, "model": "F: x log^2 x", "estimate": fitted[0], "target": A1},
            {"fit": fit, "model": "F: x log x", "estimate": fitted[1], "target": float("nan")},
            {"fit": fit, "model": "F: x", "estimate": fitted[2], "target": float("nan")},
            {"fit": fit, "model": "G: envelope slope", "estimate": G_slope.estimate, "target": 1.0},
        ]
    df = pd.DataFrame(rows)
    write_result(df, config, table2.limit)
    return 0


def cmd_ledger(config, extras):
    from asymptotics import ledger, ledger_frame, LEDGER
    kind, k = extras.get("ledger_kind"), extras.get("ledger_k")
    if kind is not None and k is not None:
        sys.stdout.write(f"{ledger(kind, k)}\n")
        return 0
    if kind is not None:
        raise UsageError("ledger needs both a kind and k, or neither")
    write_result(ledger_frame(), config, json_data=LEDGER.to_dict())
    return 0


def cmd_verify(config, extras):
    from verify import run_acceptance
    return run_acceptance(config)


def cmd_cache(config, extras):
    cache = _cache(config)
    if extras.get("action") == "clear":
        removed = cache.clear()
        sys.stdout.write(f"removed {removed} tables from {cache.cache_dir}\n")
        return 0
    tables = cache.list_tables()
    df = pd.DataFrame(tables, columns=["name", "k", "N", "version", "size", "filepath"])
    write_result(df, config)
    return 0


HANDLERS = {
    "sieve": cmd_sieve,
    "delta": cmd_delta,
    "integrals": cmd_integrals,
    "voronoi": cmd_voronoi,
    "perron": cmd_perron,
    "mellin": cmd_mellin,
    "laplace": cmd_laplace,
    "constants": cmd_constants,
    "fit": cmd_fit,
    "ledger": cmd_ledger,
    "verify": cmd_verify,
    "cache": cmd_cache,
}
assert set(HANDLERS) == set(COMMANDS)


def run(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv``, run the subcommand and return its exit status."""
    try:
        config, extras = load_config(argv)
    except DivlabError as e:
        sys.stderr.write(f"divlab: {e}\n")
        return e.exit_code
    except SystemExit as e:
        return int(e.code or 0)

    log = setup_logging(config.log_dir, config.log_level)
    sys.excepthook = lambda exc_type, exc_value, exc_traceback: log_exception(
        log, exc_type, exc_value, exc_traceback
    )
    logger.info(f"Command: {config.command} (config hash {config.hash()})")

    try:
        with ErrorHandler(logger, f"command {config.command}"):
            return HANDLERS[config.command](config, extras)
    except DivlabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.stderr.write(f"divlab: {e}\n")
        return e.exit_code
    except Exception as e:
        logger.critical(f"FATAL ERROR in {config.command}: {e}", exc_info=True)
        return 1


def main():
    """Main entry point."""
    exit_code = run(sys.argv[1:])
    logger.info("=" * 80)
    logger.info(f"divlab finished - Exit code: {exit_code}")
    logger.info("=" * 80)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())

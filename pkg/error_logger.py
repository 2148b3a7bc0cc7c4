"""
Logging setup and the error hierarchy shared by every divlab module.
"""

import logging
import os
import sys
import traceback
from datetime import datetime
from pathlib import Path


LOGGER_NAME = "divlab"


class DivlabError(Exception):
    """Base class for all errors raised by the laboratory."""

    exit_code = 1


class UsageError(DivlabError):
    """Bad command line or configuration value."""

    exit_code = 2


class CapacityError(DivlabError):
    """Request exceeds the memory budget or the sieve limit."""

    exit_code = 3


class VerificationFailure(DivlabError):
    """One or more acceptance checks failed."""

    exit_code = 1


class DomainError(DivlabError, ValueError):
    """Argument outside the domain of an operation."""


class ExactOverflowError(DivlabError, ArithmeticError):
    """An integer quantity left the exactly representable range (2^53)."""


class PoleError(DivlabError, ValueError):
    """Evaluation requested at (or too close to) a pole."""


class CeilingError(DivlabError, ValueError):
    """Imaginary part above the configured evaluation ceiling."""


class UnsupportedError(DivlabError, ValueError):
    """Order, power or method outside the supported set."""


class QuadratureError(DivlabError):
    """Adaptive quadrature failed to reach its tolerance."""


class IllConditionedError(DivlabError):
    """Least-squares design too narrow or singular."""


class DegenerateError(DivlabError):
    """Not enough usable samples for a regression."""


def setup_logging(log_dir=None, level="INFO"):
    """Configure root logging: timestamped file plus stderr."""
    log_dir = Path(log_dir or os.environ.get("DIVLAB_LOG_DIR", "logs"))
    log_dir.mkdir(parents=True, exist_ok=True)

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = log_dir / f"divlab_{timestamp}.log"

    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)

    # Results go to stdout, so log records stay on stderr.
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )

    logger = logging.getLogger(LOGGER_NAME)
    logger.info("=" * 80)
    logger.info("divlab starting")
    logger.info(f"Log file: {log_file}")
    logger.info("=" * 80)

    return logger


def log_exception(logger, exc_type, exc_value, exc_traceback):
    """Log uncaught exceptions."""
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return

    logger.critical("Uncaught exception", exc_info=(exc_type, exc_value, exc_traceback))
    logger.critical("=" * 80)
    logger.critical(f"Exception Type: {exc_type.__name__}")
    logger.critical(f"Exception Value: {exc_value}")
    logger.critical(''.join(traceback.format_exception(exc_type, exc_value, exc_traceback)))
    logger.critical("=" * 80)


class ErrorHandler:
    """Context manager that logs entry, exit and failure of a named stage."""

    def __init__(self, logger, section_name):
        self.logger = logger
        self.section_name = section_name

    def __enter__(self):
        self.logger.debug(f"Entering: {self.section_name}")
        return self

    def __exit__(self, exc_type, exc_value, exc_traceback):
        if exc_type is not None:
            self.logger.error(f"Error in {self.section_name}: {exc_type.__name__}: {exc_value}")
            self.logger.debug("Traceback:", exc_info=(exc_type, exc_value, exc_traceback))
            return False

        self.logger.debug(f"Completed: {self.section_name}")
        return False

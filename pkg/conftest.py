"""Shared fixtures: an isolated cache directory and small sieved tables."""

import os

import pytest


@pytest.fixture(scope="session", autouse=True)
def divlab_dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("divlab")
    saved = {key: os.environ.get(key) for key in ("DIVLAB_CACHE_DIR", "DIVLAB_LOG_DIR")}
    os.environ["DIVLAB_CACHE_DIR"] = str(root / "cache")
    os.environ["DIVLAB_LOG_DIR"] = str(root / "logs")
    yield root
    for key, value in saved.items():
        if value is None:
            os.environ.pop(key, None)
        else:
            os.environ[key] = value


@pytest.fixture(scope="session")
def model2():
    from mainterm import main_term_poly
    return main_term_poly(2)


@pytest.fixture(scope="session")
def model3():
    from mainterm import main_term_poly
    return main_term_poly(3)


@pytest.fixture(scope="session")
def table2():
    from arith_core import sieve_dk
    return sieve_dk(2, 20_000)


@pytest.fixture(scope="session")
def table3():
    from arith_core import sieve_dk
    return sieve_dk(3, 20_000)


@pytest.fixture(scope="session")
def integrator2(table2, model2):
    from arith_core import PanelIntegrator
    return PanelIntegrator(table2, model2)

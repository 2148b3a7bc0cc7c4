"""End-to-end tests of the divlab command line."""

import json

import pytest

from main import HANDLERS, load_config, run
from models import COMMANDS
from utils import load_result_csv


@pytest.fixture
def cache_args(tmp_path):
    return ["--cache-dir", str(tmp_path / "cache")]


def test_every_command_has_a_handler():
    assert set(HANDLERS) == set(COMMANDS)


def test_ledger_lookup_prints_fraction(capsys):
    assert run(["ledger", "theta", "10"]) == 0
    assert capsys.readouterr().out == "29/20\n"


def test_ledger_json(tmp_path):
    out = tmp_path / "ledger.json"
    assert run(["ledger", "--format", "json", "--output", str(out)]) == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["metadata"]["tool"] == "divlab"
    assert payload["metadata"]["command"] == "ledger"
    assert payload["data"]["theta"]["10"] == "29/20"


def test_ledger_needs_both_arguments():
    assert run(["ledger", "theta"]) == 2


def test_unknown_ledger_entry_exits_nonzero():
    assert run(["ledger", "theta", "2"]) == 1


def test_delta_at_ten(tmp_path, cache_args):
    out = tmp_path / "delta.csv"
    assert run(["delta", "--k", "2", "--x", "10", "--output", str(out)] + cache_args) == 0
    meta, df = load_result_csv(str(out))
    assert meta["command"] == "delta"
    assert meta["sieve_limit"] == "10"
    assert df["summatory"].iloc[0] == 25.0
    assert df["delta"].iloc[0] == pytest.approx(0.179836, abs=1e-5)


def test_stieltjes_constants_land_in_cache_dir(tmp_path, cache_args):
    out = tmp_path / "delta.csv"
    assert run(["delta", "--k", "3", "--x", "50", "--output", str(out)] + cache_args) == 0
    stored = json.loads((tmp_path / "cache" / "stieltjes.json").read_text(encoding="utf-8"))
    assert stored["kmax"] >= 12


def test_unknown_command_is_a_usage_error():
    assert run(["nonsense"]) == 2


def test_bad_flag_value_is_a_usage_error(cache_args):
    assert run(["delta", "--spacing", "cubic"] + cache_args) == 2


def test_missing_config_file(tmp_path):
    assert run(["delta", "--config", str(tmp_path / "absent.cfg")]) == 2


def test_integer_x_rejected_by_perron(cache_args):
    assert run(["perron", "--x", "10"] + cache_args) == 1


def test_request_beyond_sieve_limit(cache_args):
    assert run(["delta", "--x", "5000", "--N", "1000"] + cache_args) == 3


def test_xlsx_needs_output_path(cache_args):
    assert run(["sieve", "--N", "100", "--format", "xlsx"] + cache_args) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sample\nk = 3\nN = 5e3\npoints = 4\nlog-level = DEBUG\n", encoding="utf-8")
    config, extras = load_config(["delta", "--config", str(cfg), "--k", "2"])
    assert config.command == "delta"
    assert config.k == 2
    assert config.N == 5000
    assert config.points == 4
    assert config.log_level == "DEBUG"
    assert config.start == 1.0e4
    assert extras == {}


def test_config_file_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n", encoding="utf-8")
    assert run(["delta", "--config", str(cfg)]) == 2


def test_output_independent_of_threads(tmp_path, cache_args):
    outputs = []
    for threads in (1, 4):
        out = tmp_path / f"integrals_{threads}.csv"
        argv = ["integrals", "--N", "5000", "--start", "100", "--stop", "5000", "--points", "8",
                "--threads", str(threads), "--output", str(out)] + cache_args
        assert run(argv) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_sieve_then_cache_list(tmp_path, cache_args):
    assert run(["sieve", "--k", "3", "--N", "1000", "--output", str(tmp_path / "s.csv")] + cache_args) == 0
    _, sieved = load_result_csv(str(tmp_path / "s.csv"))
    assert sieved["N"].iloc[0] == 1000
    assert sieved["k"].iloc[0] == 3

    listing = tmp_path / "list.csv"
    assert run(["cache", "list", "--output", str(listing)] + cache_args) == 0
    _, df = load_result_csv(str(listing))
    assert len(df) == 1
    assert (df["k"].iloc[0], df["N"].iloc[0]) == (3, 1000)

    assert run(["cache", "clear"] + cache_args) == 0
    assert run(["cache", "list", "--output", str(listing)] + cache_args) == 0
    _, df = load_result_csv(str(listing))
    assert df.empty

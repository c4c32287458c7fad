import csv
import json
from pathlib import Path

import jsonschema
import pytest

from fpklab.cli import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_OK,
    EXIT_SOLVER,
    main,
    parse_config,
    parse_config_text,
)
from fpklab.errors import ConfigError

from tests.test_report import SCHEMA

MINIMAL = """
name = "mini"
dimension = 1
theta = 1.0

[drift]
key = "constant"
params = { c = 0.5 }

[grid]
R = 8.0
n = 401

[[checks]]
id = "check_lsi_apriori"
"""

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_parses(tmp_path):
    cfg = parse_config(write(tmp_path, MINIMAL))
    assert cfg.name == "mini" and cfg.checks[0].id == "check_lsi_apriori"
    assert len(cfg.digest) == 64


@pytest.mark.parametrize("mutation,field", [
    (("theta = 1.0", "theta = -1.0"), "theta"),
    (("dimension = 1", "dimension = 3"), "dimension"),
    (("n = 401", "n = 401\nspacing = 2"), "spacing"),
    (('id = "check_lsi_apriori"', 'id = "check_nothing"'), "checks[0].id"),
    (('key = "constant"', 'key = "wavy"'), "drift.key"),
    (('id = "check_lsi_apriori"', 'id = "check_tail"\nregime = "m3"'), "checks[0].regime"),
    (('id = "check_lsi_apriori"', 'id = "check_kantorovich_global"\np = "two"'), "checks[0].p"),
])
def test_config_errors_name_the_field(mutation, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config_text(MINIMAL.replace(*mutation))


def test_missing_file_and_bad_toml(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "absent.toml")
    with pytest.raises(ConfigError, match="Invalid value"):
        parse_config_text("name = ")


def test_missing_required_check_param():
    with pytest.raises(ConfigError, match="regime"):
        parse_config_text(MINIMAL.replace('id = "check_lsi_apriori"', 'id = "check_tail"'))


def test_grid_scale():
    cfg = parse_config_text(MINIMAL)
    assert cfg.scaled(2.0).n == 801
    assert cfg.scaled(0.5).n == 201


def test_verify_writes_reports(tmp_path):
    out = tmp_path / "out"
    code = main(["verify", "--config", str(SCENARIOS / "tanh_1d.toml"), "--out", str(out)])
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert [c["status"] for c in manifest["checks"]] == [
        "pass", "inapplicable", "exploratory", "exploratory"]
    for c in manifest["checks"]:
        jsonschema.validate(json.loads((out / c["report"]).read_text()), SCHEMA)
    with open(out / "00_check_tail.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["param", "lhs", "rhs", "margin"] and len(rows) == 5
    timing = json.loads((out / "timing.json").read_text())
    assert set(timing) == {"timestamp", "wall_times"}
    assert "timestamp" not in manifest


def test_strict_counts_inapplicable(tmp_path):
    args = ["verify", "--config", str(SCENARIOS / "tanh_1d.toml"), "--out", str(tmp_path)]
    assert main(args + ["--strict"]) == EXIT_FAIL


def test_failing_check_exit_code(tmp_path):
    text = MINIMAL.replace('id = "check_lsi_apriori"',
                           'id = "trace_master_inequality"\nlam = 0.001\nt = [0.5, 1.0]')
    assert main(["verify", "--config", str(write(tmp_path, text)), "--out",
                 str(tmp_path / "o")]) == EXIT_FAIL


def test_config_error_exit_code(tmp_path, capsys):
    p = write(tmp_path, MINIMAL.replace("theta = 1.0", "theta = -1.0"))
    assert main(["verify", "--config", str(p)]) == EXIT_CONFIG
    assert "theta" in capsys.readouterr().err


def test_corrupted_density_exit_code(tmp_path, capsys):
    p = write(tmp_path, MINIMAL)
    code = main(["verify", "--config", str(p), "--out", str(tmp_path / "o"),
                 "--corrupt-density", "1.1"])
    assert code == EXIT_SOLVER
    assert "InvariantViolation" in capsys.readouterr().err


def test_unsupported_drift_exit_code(tmp_path):
    text = MINIMAL.replace('key = "constant"', 'key = "orlicz-m"').replace(
        "params = { c = 0.5 }", "params = { c = 3.0, m = 2.0 }")
    text = text.replace("dimension = 1", "dimension = 2").replace("n = 401", "n = 41")
    assert main(["solve", "--config", str(write(tmp_path, text)), "--out",
                 str(tmp_path / "o")]) == EXIT_SOLVER


@pytest.mark.parametrize("scenario,header", [("constant_1d", ["x", "f"]),
                                             ("separable_2d", ["x", "y", "f"])])
def test_solve_csv(tmp_path, scenario, header):
    out = tmp_path / scenario
    assert main(["solve", "--config", str(SCENARIOS / f"{scenario}.toml"), "--out",
                 str(out), "--grid-scale", "0.5"]) == EXIT_OK
    with open(out / "density.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == header
    n = 401 if len(header) == 2 else 81 * 81
    assert len(rows) == n + 1
    # 17 significant digits round-trip exactly
    assert float(rows[1][-1]) == float(repr(float(rows[1][-1])))


def test_catalog_lists_everything(capsys):
    assert main(["catalog"]) == EXIT_OK
    out = capsys.readouterr().out
    for word in ("constant", "orlicz-m", "check_tail", "counterexample_coordinate"):
        assert word in out


def test_report_merges(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["verify", "--config", str(SCENARIOS / "tanh_1d.toml"), "--out", str(a)])
    p = write(tmp_path, MINIMAL)
    main(["verify", "--config", str(p), "--out", str(b)])
    capsys.readouterr()
    assert main(["report", str(a), str(b / "manifest.json")]) == EXIT_OK
    merged = json.loads(capsys.readouterr().out)
    assert merged["status_counts"] == {"exploratory": 2, "inapplicable": 1, "pass": 2}
    assert main(["report", str(a), "--strict"]) == EXIT_FAIL
    assert main(["report", str(tmp_path / "missing")]) == EXIT_CONFIG


def test_seed_override(tmp_path):
    p = write(tmp_path, MINIMAL.replace('id = "check_lsi_apriori"',
                                        'id = "check_poincare_interpolation"\ncount = 5'))
    outs = []
    for seed in (1, 2):
        o = tmp_path / f"s{seed}"
        assert main(["verify", "--config", str(p), "--out", str(o), "--seed", str(seed)]) == 0
        outs.append((o / "00_check_poincare_interpolation.json").read_text())
    assert outs[0] != outs[1]

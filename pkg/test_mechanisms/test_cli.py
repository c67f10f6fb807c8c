import json

import numpy as np
import pytest

from conftest import preset_path
from main import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VIOLATION, parse_grids, run, run_config_from_args, build_parser
from medmech.errors import ConfigError


def test_example1_command(tmp_path):
    assert run(["example1", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "example1" / "example1_report.json") as f:
        report = json.load(f)
    assert report["passed"] is True
    assert report["failures"] == []


def test_solve_writes_outputs(tmp_path):
    assert run(["solve", str(preset_path("example1")), "--out", str(tmp_path)]) == EXIT_OK
    out = tmp_path / "example1"
    with open(out / "summary.json") as f:
        summary = json.load(f)
    assert summary["revenue_direct"] == pytest.approx(0.009324, abs=1e-4)
    assert summary["regularity"]["buyer_regular"] is True
    header = (out / "buyer_curves.csv").read_text().splitlines()[0]
    assert header == "t,lambda,Pb,Rb,Ub"
    data = np.loadtxt(out / "seller_curves.csv", delimiter=",", skiprows=1)
    assert data.shape == (2001, 5)
    assert (out / "profile_buyer.csv").exists() and (out / "profile_seller.csv").exists()


def test_solve_is_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert run(["solve", str(preset_path("example1")), "--out", str(tmp_path / sub), "--grid-n", "201"]) == EXIT_OK
    for name in ("summary.json", "buyer_curves.csv", "seller_curves.csv"):
        assert (tmp_path / "a" / "example1" / name).read_bytes() == (tmp_path / "b" / "example1" / name).read_bytes()


def test_verify_passes(tmp_path):
    assert run(["verify", str(preset_path("example1")), "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "example1" / "audit.json") as f:
        doc = json.load(f)
    assert doc["violations"] == []


def test_region_command(tmp_path):
    assert run(["region", str(preset_path("example1")), "--nt", "200", "--nq", "200", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "example1" / "region.csv").read_text().splitlines()
    assert lines[0] == "t,q,status"
    assert len(lines) == 1 + 200 * 200
    assert any(line.endswith(",trade_loss") for line in lines[1:])


def test_iron_command(tmp_path):
    assert run(["iron", str(preset_path("irregular_bimodal_buyer")), "--out", str(tmp_path)]) == EXIT_OK
    out = tmp_path / "irregular_bimodal_buyer"
    with open(out / "ironed_intervals.json") as f:
        intervals = json.load(f)
    assert intervals["buyer"]["w"]
    assert (out / "envelope_buyer.csv").read_text().splitlines()[0] == "w,x,h,H,L,l"


def test_oracle_command(tmp_path):
    assert run(["oracle", str(preset_path("example1")), "--grids", "3,4", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "example1" / "oracle.json") as f:
        doc = json.load(f)
    assert [g["grid"] for g in doc["grids"]] == [[3, 3], [4, 4]]
    for g in doc["grids"]:
        assert g["lp_revenue"] >= g["closed_form_on_grid_revenue"] - 1e-7


def test_oracle_cap_is_numeric_failure(tmp_path):
    assert run(["oracle", str(preset_path("example1")), "--grids", "40", "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_config_errors(tmp_path):
    assert run(["solve", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert run(["solve", str(broken), "--out", str(tmp_path)]) == EXIT_CONFIG
    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps({
        "buyer_dist": {"family": "uniform", "support": [1, 2]},
        "seller_dist": {"family": "uniform", "support": [1, 2]},
        "valuation": {"alpha1": "q - 1.5", "k": 1.5},
    }))
    assert run(["verify", str(invalid), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_bad_grids_argument(tmp_path):
    assert run(["oracle", str(preset_path("example1")), "--grids", "a,b", "--out", str(tmp_path)]) == EXIT_CONFIG
    with pytest.raises(ConfigError):
        parse_grids(",")


def test_overrides_reach_run_config():
    args = build_parser().parse_args(["solve", "x.json", "--grid-n", "101", "--tol", "1e-8"])
    cfg = run_config_from_args(args)
    assert cfg.overrides == {"grid_n": 101, "tol": 1e-8}
    assert cfg.command == "solve" and cfg.instance == "x.json"


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        run(["frobnicate"])


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC}) == 4

import json
import subprocess
import sys

import numpy as np
import pytest

from isodiff.checks import Check
from isodiff.cli import main
from isodiff.continuum import ContinuousSystem
from isodiff.generate import random_state
from isodiff.serialization import (
    SystemConfig,
    continuous_to_json,
    decode_array,
    dumps,
    load_system,
    save_system,
)


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    return code


def read(path):
    with open(path) as fh:
        return json.load(fh)


@pytest.fixture
def system_file(tmp_path):
    cfg = SystemConfig.from_state(random_state(3, 2, 2), "difference", 3)
    path = tmp_path / "sys.json"
    save_system(cfg, path)
    return path


# --- run ---------------------------------------------------------------------

def test_run_zero_target(system_file, tmp_path):
    out = tmp_path / "r.json"
    assert run(["run", "--system", system_file, "--target", "0,0", "--out", out]) == 0
    obj = read(out)
    assert len(obj["trajectory"]) == 1
    cfg = load_system(system_file)
    B = decode_array(obj["trajectory"][0]["B"])
    assert np.array_equal(B, cfg.divisor_state().B)


def test_run_diagonal_target(system_file, tmp_path):
    out = tmp_path / "r.json"
    assert run(["run", "--system", system_file, "--target", "1,1", "--out", out]) == 0
    obj = read(out)
    cfg = load_system(system_file)
    B0 = cfg.divisor_state().B
    B1 = decode_array(obj["trajectory"][-1]["B"])
    A0 = cfg.A0
    for X, Y in zip(B0, B1):
        pred = np.linalg.solve(A0, X @ A0) - np.eye(2)
        assert np.abs(Y - pred).max() <= 1e-12
    assert obj["trajectory"][-1]["k"] == [1, 1]


@pytest.mark.parametrize("mode", ["divisor", "factor"])
def test_run_reports_residuals(mode, tmp_path):
    out = tmp_path / "r.json"
    assert run(["run", "--seed", 5, "--mode", mode, "--target=2,-1", "--out", out]) == 0
    obj = read(out)
    assert not obj["failed"]
    assert all(v <= obj["thresholds"][k] for k, v in obj["residual_summary"].items())


def test_run_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert run(["run", "--seed", 1, "--target", "1,0", "--format", "csv", "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k1,k2,block,row,col,re,im"
    # two states, two blocks of 2x2 entries each
    assert len(lines) == 1 + 2 * 2 * 4


def test_run_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(["run", "--seed", 9, "--target", "2,1", "--out", p]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_deterministic_across_processes(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        p = tmp_path / name
        subprocess.run([sys.executable, "-m", "isodiff.cli", "run", "--seed", "4", "--target", "1,2",
                        "--variant", "q=0.7", "--out", str(p)], check=True, capture_output=True)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_run_genericity_abort(tmp_path, capsys):
    B1 = np.array([[0.2, 0.5], [0.1, -0.3j]])
    cfg = {"m": 2, "n": 2, "A0": np.diag([1.0, 1j]), "divisors": [B1, B1 + 0.5]}
    path = tmp_path / "g.json"
    path.write_text(dumps(cfg))
    assert run(["run", "--system", path, "--target", "3,0"]) == 3
    assert "lattice point" in capsys.readouterr().err


def test_run_wrong_target_length(system_file):
    assert run(["run", "--system", system_file, "--target", "1"]) == 2


# --- check -------------------------------------------------------------------

def test_check_all_passes(tmp_path):
    out = tmp_path / "c.json"
    assert run(["check", "--seed", 2, "--suite", "all", "--out", out]) == 0
    obj = read(out)
    assert obj["overall"] == "pass"
    assert set(obj["suites"]) == {"refactor", "flows", "continuum"}


def test_check_congruent_pair_named(tmp_path, capsys):
    cfg = {"m": 2, "n": 2, "A0": np.eye(2),
           "divisors": [np.diag([0.25, 0.5]), np.diag([1.25, 0.8])]}
    path = tmp_path / "bad.json"
    path.write_text(dumps(cfg))
    assert run(["check", "--system", path]) == 2
    err = capsys.readouterr().err
    assert "0.25" in err and "1.25" in err


def test_check_unreachable_tolerance(tmp_path):
    out = tmp_path / "c.json"
    assert run(["check", "--seed", 2, "--suite", "refactor", "--tol", "1e-15", "--out", out]) == 4
    obj = read(out)
    assert obj["overall"] == "unreachable"


def test_check_all_suites_unreachable_tolerance(tmp_path):
    # quantities that only converge in eps meet their own thresholds, so a
    # tightened tolerance is unreachable rather than a false invariant
    out = tmp_path / "c.json"
    assert run(["check", "--seed", 3, "--suite", "all", "--tol", "1e-15", "--out", out]) == 4
    assert read(out)["overall"] == "unreachable"


@pytest.mark.parametrize("value, default, status", [
    (1e-16, None, "pass"),
    (1e-13, None, "unreachable"),
    (1e-3, 1e-2, "unreachable"),
    (1e-3, None, "fail"),
    (1e-1, 1e-2, "fail"),
    (np.nan, 1e-2, "fail"),
])
def test_check_status_classification(value, default, status):
    assert Check("x", value, 1e-15, default).status == status


def test_check_reports_names(tmp_path):
    out = tmp_path / "c.json"
    run(["check", "--seed", 2, "--suite", "refactor", "--out", out])
    names = {c["name"] for c in read(out)["suites"]["refactor"]}
    assert {"swap_routes_agree", "reconstruction_from_divisors", "telescope"} <= names


# --- limit -------------------------------------------------------------------

def test_limit_single_epsilon(tmp_path):
    out = tmp_path / "l.csv"
    assert run(["limit", "--seed", 0, "--halvings", 0, "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,index,error" and len(lines) == 3


def test_limit_commuting_data(tmp_path):
    sys_ = ContinuousSystem([0.0, 0.8], [np.diag([0.2, -0.3j]), np.diag([0.4, 0.1])])
    path = tmp_path / "c.json"
    path.write_text(dumps(continuous_to_json(sys_)))
    out = tmp_path / "l.json"
    assert run(["limit", "--system", path, "--halvings", 2, "--format", "json", "--out", out]) == 0
    assert max(r["error"] for r in read(out)["rows"]) <= 1e-8


def test_limit_conjecture_rates(tmp_path):
    out = tmp_path / "l.json"
    assert run(["limit", "--seed", 1, "--format", "json", "--out", out]) == 0
    assert all(1.6 <= r <= 2.4 for r in read(out)["rates"])


@pytest.mark.parametrize("sign", ["1", "-1"])
def test_limit_unit_shift(tmp_path, sign):
    out = tmp_path / "u.json"
    assert run(["limit", "--seed", 2, "--experiment", "unit-shift", "--pole", 1,
                f"--sign={sign}", "--format", "json", "--out", out]) == 0
    assert max(r["error"] for r in read(out)["rows"]) <= 1e-9


def test_limit_elementary(tmp_path):
    out = tmp_path / "e.json"
    assert run(["limit", "--seed", 3, "--experiment", "elementary", "--row", 1,
                "--format", "json", "--out", out]) == 0
    rows = read(out)["rows"]
    for l in range(2):
        err = [r["error"] for r in rows if r["index"] == l]
        assert all(b < a for a, b in zip(err, err[1:]))


def test_limit_rejects_discrete_file(system_file):
    assert run(["limit", "--system", system_file]) == 2


# --- transform ---------------------------------------------------------------

def test_transform_zero(system_file, tmp_path):
    out = tmp_path / "t.json"
    assert run(["transform", "--system", system_file, "--out", out]) == 0
    obj = read(out)
    A = load_system(system_file).polynomial()
    B = load_system(out).polynomial()
    assert (A - B).norm() == 0


def test_transform_unit_group_shift(system_file, tmp_path):
    out = tmp_path / "t.json"
    assert run(["transform", "--system", system_file, "--kappa=-1,-1,0,0", "--delta", "1,1",
                "--out", out]) == 0
    cert = read(out)["certificate"]
    before = decode_array(cert["roots_before"])
    after = decode_array(cert["roots_after"])
    assert np.allclose(after - before, [-1, -1, 0, 0])
    assert cert["root_shift_error"] <= 1e-6
    assert np.allclose(decode_array(cert["exponent_shift_measured"]), [1, 1], atol=1e-8)
    assert cert["leading_change"] <= 1e-12


def test_transform_round_trip(system_file, tmp_path):
    t1, t2 = tmp_path / "t1.json", tmp_path / "t2.json"
    assert run(["transform", "--system", system_file, "--kappa=1,0,-1,1", "--delta=-1,0",
                "--out", t1]) == 0
    assert run(["transform", "--system", t1, "--kappa=-1,0,1,-1", "--delta=1,0", "--out", t2]) == 0
    A = load_system(system_file).polynomial()
    B = load_system(t2).polynomial()
    assert (A - B).norm() <= 1e-8 * A.norm()


def test_transform_balance(system_file):
    assert run(["transform", "--system", system_file, "--kappa", "1,0,0,0"]) == 2


# --- configuration files -----------------------------------------------------

@pytest.mark.parametrize("variant", ["difference", "q=0.7", "autonomous"])
def test_config_round_trip(tmp_path, variant):
    from isodiff.refactor import Twist
    cfg = SystemConfig.from_state(random_state(1, 3, 2, Twist.parse(variant)), variant, 1)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_system(cfg, a)
    save_system(load_system(a), b)
    assert a.read_bytes() == b.read_bytes()
    back = load_system(a)
    assert np.array_equal(np.asarray(back.data), np.asarray(cfg.data))
    assert back.variant == cfg.variant


def test_config_needs_one_representation(tmp_path):
    cfg = {"m": 2, "n": 1, "A0": np.eye(2), "divisors": [np.eye(2)], "factors": [np.eye(2)]}
    path = tmp_path / "x.json"
    path.write_text(dumps(cfg))
    assert run(["check", "--system", path]) == 2


def test_missing_file():
    assert run(["run", "--system", "/nonexistent/file.json"]) == 2

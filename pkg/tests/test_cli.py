import json
import math

import numpy as np
import pytest

import kdvcrit.cli as cli
from kdvcrit import QuadratureFailure, solve_branch


def run(argv, capsys, env=None):
    env = {} if env is None else env
    try:
        code = cli.main(argv) if not env else _with_env(argv, env)
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def _with_env(argv, env):
    cfg = cli.load_config(argv, env)
    return cli.run_command(cfg)


def test_lengths_csv(capsys):
    code, out, _ = run(["lengths", "--max-n", "3"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "n,a,b,L,q"
    assert len(lines) == 5
    row = lines[1].split(",")
    assert float(row[3]) == pytest.approx(solve_branch(0).L, rel=1e-8)


def test_lengths_json_and_scan_method(capsys):
    code, out, _ = run(["lengths", "--max-n", "1", "--format", "json", "--method", "scan"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["tool_version"] and doc["config_echo"]["method"] == "scan"
    assert doc["lengths"][0]["L"] == pytest.approx(4.5183604, abs=5e-8)


def test_params_by_length(capsys):
    code, out, _ = run(["params", "--L", "4.51838052"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["n"] == 0
    assert doc["q"] == pytest.approx(0.23549116, rel=1e-7)


def test_params_rejects_noncritical_length(capsys):
    code, _, err = run(["params", "--L", "6.2831853"], capsys)
    assert code == 2 and "not a critical length" in err


@pytest.mark.parametrize("argv", [
    ["params"],
    ["params", "--n", "0", "--L", "4.5"],
    ["bogus"],
    ["omega-min", "--n", "0", "--step", "-1"],
    ["lengths", "--max-n", "x"],
])
def test_config_errors_exit_two(capsys, argv):
    code, _, err = run(argv, capsys)
    assert code == 2 and err


def test_numerical_failure_exit_one(capsys, monkeypatch):
    def fail(*a, **k):
        raise QuadratureFailure("budget exhausted")
    monkeypatch.setattr(cli, "minimize_omega", fail)
    code, _, err = run(["classify", "--n", "0"], capsys)
    assert code == 1 and err.startswith("QuadratureFailure")


def test_classify_schema(capsys):
    code, out, _ = run(["classify", "--n", "0", "--Z", "5", "--step", "0.5"], capsys)
    doc = json.loads(out)
    assert code == 0
    for key in ("n", "L", "a", "b", "q", "omega", "z_star", "classification", "scan",
                "tool_version", "config_echo"):
        assert key in doc
    assert doc["scan"] == {"Z": 5, "step": 0.5}
    assert (doc["omega"] < 0) == (doc["classification"] == "locally exactly controllable in finite time")


def test_json_numbers_carry_17_digits(capsys):
    _, out, _ = run(["params", "--n", "1"], capsys)
    text = out.split('"a": ')[1].split(",")[0]
    assert len(text.lstrip("-").replace(".", "").lstrip("0")) == 17
    assert float(text) == solve_branch(1).a


def test_omega_scan_csv(capsys):
    code, out, _ = run(["omega-scan", "--n", "0", "--Z", "1", "--step", "0.5"], capsys)
    rows = out.strip().splitlines()
    assert code == 0 and rows[0] == "z,omega_value,quad_error" and len(rows) == 6


def test_phi_csv(capsys):
    code, out, _ = run(["phi", "--n", "0", "--samples", "11"], capsys)
    rows = [r.split(",") for r in out.strip().splitlines()]
    assert rows[0] == ["x", "phi", "phi_x", "phi_xx", "phi_xxx"] and len(rows) == 12
    assert abs(float(rows[-1][1])) < 1e-9


def test_verify_passes(capsys):
    code, out, _ = run(["verify", "--n", "0"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert {c["name"] for c in doc["checks"]} >= {"profile_ode", "detQ_min_modulus", "vieta",
                                                  "E_cross_formula"}


def test_verify_failure_exits_nonzero(capsys, monkeypatch):
    monkeypatch.setattr(cli, "verify_profile",
                        lambda p: type("R", (), {"boundary_residual": 1.0, "ode_residual": 0.0,
                                                 "tol": 1e-9})())
    code, out, _ = run(["verify", "--n", "0"], capsys)
    assert code == 1 and json.loads(out)["passed"] is False


def test_env_config_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "Z": 3.0, "step": 1.0}))
    env = {"KDV_CONFIG": str(cfg)}
    c = cli.load_config(["params"], env)
    assert c.n == 2 and c.Z == 3.0
    c = cli.load_config(["params", "--n", "1"], env)
    assert c.n == 1
    c = cli.load_config(["params", "--L", "4.51838052"], env)
    assert c.n is None and c.L == 4.51838052
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"n": 3}))
    assert cli.load_config(["params", "--config", str(other)], env).n == 3


def test_bad_config_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": 1}))
    code, _, err = run(["params", "--config", str(bad)], capsys)
    assert code == 2 and "unknown config keys" in err


def test_reruns_are_byte_identical(capsys):
    outs = [run(["omega-min", "--n", "1", "--Z", "2", "--step", "0.5"], capsys)[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_expression_evaluator():
    f = cli.compile_expression("sin(5*t)*t**2*(1-t)**2 + pi - e")
    t = 0.3
    assert f(t) == pytest.approx(math.sin(1.5) * 0.09 * 0.49 + math.pi - math.e)
    for src in ("__import__('os')", "t.real", "x + 1", "open('f')", "[t]", "t if t else 1"):
        with pytest.raises(cli.ConfigError):
            cli.compile_expression(src)


def _spec(tmp_path, **kw):
    p0 = solve_branch(0)
    spec = {"n": 0, "T": 0.01, "dx": p0.L / 50, "dt": 1e-3, "y0": "zero",
            "control": "sin(5*t)*t**2*(0.01-t)**2"}
    spec.update(kw)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(spec))
    return str(path)


def test_simulate_csv(tmp_path, capsys):
    code, out, _ = run(["simulate", "--spec", _spec(tmp_path)], capsys)
    rows = out.strip().splitlines()
    assert code == 0 and rows[0] == "t,x,y"
    assert len(rows) == 1 + 11 * 51


def test_simulate_binary_roundtrip(tmp_path, capsys):
    out = tmp_path / "traj.bin"
    code, _, _ = run(["simulate", "--spec", _spec(tmp_path), "--format", "binary",
                      "--output", str(out)], capsys)
    nx, nt, L, T, frames = cli.read_binary(out.read_bytes())
    assert code == 0 and (nx, nt) == (51, 11) and T == 0.01
    assert L == pytest.approx(solve_branch(0).L)
    assert frames.shape == (11, 51)


def test_simulate_json_with_csv_control(tmp_path, capsys):
    ctrl = tmp_path / "u.csv"
    ctrl.write_text("t,u\n0,0\n0.01,1\n")
    code, out, _ = run(["simulate", "--spec", _spec(tmp_path, control="u.csv", y0="zero"),
                        "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["frames"][-1][-1] == pytest.approx(1.0)
    assert doc["frames"][5][-1] == pytest.approx(0.5)


def test_simulate_spec_errors(tmp_path, capsys):
    code, _, err = run(["simulate", "--spec", _spec(tmp_path, L=3.0)], capsys)
    assert code == 2 and "exactly one" in err
    spec = _spec(tmp_path, y0="phi")
    data = json.loads(open(spec).read())
    del data["n"]
    data["L"] = 3.0
    open(spec, "w").write(json.dumps(data))
    code, _, err = run(["simulate", "--spec", spec], capsys)
    assert code == 2 and "critical" in err
    code, _, _ = run(["simulate", "--spec", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_simulate_inline_samples_on_two_pi(tmp_path, capsys):
    spec = {"L": 2 * math.pi, "T": 0.01, "dx": 2 * math.pi / 20, "dt": 1e-3,
            "y0": list(np.zeros(21)), "bc": {"third_kind": "second_derivative"}}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(spec))
    code, out, _ = run(["simulate", "--spec", str(path)], capsys)
    assert code == 0
    assert all(float(r.split(",")[2]) == 0 for r in out.strip().splitlines()[1:])

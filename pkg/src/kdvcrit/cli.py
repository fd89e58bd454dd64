"""Command-line front end: tables, scans and simulation artifacts as CSV, JSON or binary.

Configuration is merged from built-in defaults, the JSON file named by the
KDV_CONFIG environment variable, a --config JSON file and finally explicit flags.
Exit status is 0 on success, 1 on a numerical failure and 2 on a configuration error.
"""
import argparse
import ast
import csv
import io
import json
import math
import operator
import os
import struct
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .errors import KdvCritError
from .kdv import BoundarySpec, simulate_linear_kdv
from .lengths import ROOT_TOL, is_critical, scan_branch, solve_branch
from .omega import (asymptotic_E, asymptotic_E_from_eta, b_integral, check_detQ_nonzero,
                    minimize_omega, omega_scan)
from .profile import eval_profile, eval_varphi, verify_profile
from .roots import solve_depressed_cubic

BINARY_MAGIC = b"KDV1"
BINARY_HEADER = struct.Struct("<4sQQdd")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str = ""
    n: int | None = None
    L: float | None = None
    max_n: int = 3
    method: str = "bisect"
    root_tol: float = ROOT_TOL
    quad_tol: float = 1e-10
    Z: float = 200.0
    step: float = 0.1
    refine_tol: float = 1e-8
    samples: int = 201
    spec: str | None = None
    output: str | None = None
    format: str | None = None

    def validate(self):
        for name in ("root_tol", "quad_tol", "Z", "step", "refine_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.n is not None and self.L is not None:
            raise ConfigError("give either n or L, not both")
        if self.n is not None and self.n < 0:
            raise ConfigError("n must be non-negative")
        if self.max_n < 0:
            raise ConfigError("max_n must be non-negative")
        if self.samples < 2:
            raise ConfigError("samples must be at least 2")
        if self.method not in ("bisect", "scan"):
            raise ConfigError("method must be 'bisect' or 'scan'")
        if self.format not in (None, "csv", "json", "binary"):
            raise ConfigError("format must be csv, json or binary")


# ---------------------------------------------------------------- serialization

def _json_value(v):
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise KdvCritError(f"non-finite value {v} in output")
        return format(v, ".17g")
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def to_json(payload, cfg):
    doc = {"tool_version": __version__, "config_echo": config_echo(cfg)}
    doc.update(payload)
    return _json_value(doc) + "\n"


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(float(v), ".9g") if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def to_binary(traj):
    nt, nx = traj.frames.shape
    head = BINARY_HEADER.pack(BINARY_MAGIC, nx, nt, traj.L, traj.T)
    return head + np.ascontiguousarray(traj.frames, dtype="<f8").tobytes()


def read_binary(blob):
    """Inverse of to_binary: (nx, nt, L, T, frames)."""
    magic, nx, nt, L, T = BINARY_HEADER.unpack_from(blob)
    assert magic == BINARY_MAGIC, "not a KDV1 trajectory file"
    data = np.frombuffer(blob, dtype="<f8", offset=BINARY_HEADER.size)
    assert data.size == nx * nt, "truncated trajectory file"
    return nx, nt, L, T, data.reshape(nt, nx)


def config_echo(cfg):
    return {k: v for k, v in asdict(cfg).items() if v is not None}


def emit(cfg, text=None, blob=None):
    if cfg.output:
        mode, data = ("wb", blob) if blob is not None else ("w", text)
        with open(cfg.output, mode) as fh:
            fh.write(data)
    elif blob is not None:
        sys.stdout.buffer.write(blob)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {name: getattr(math, name) for name in
          ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan")}
_FUNCS["abs"] = abs
_CONSTS = {"pi": math.pi, "e": math.e}


def compile_expression(src, var="t"):
    """Safe arithmetic expression in one variable, e.g. 'sin(5*t)*t**2*(1-t)**2'."""
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {src!r}: {exc.msg}") from exc

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
        elif isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS) or node.keywords:
                raise ConfigError(f"function not allowed in {src!r}")
            for a in node.args:
                check(a)
        elif isinstance(node, ast.Name):
            if node.id != var and node.id not in _CONSTS:
                raise ConfigError(f"unknown name {node.id!r} in {src!r}")
        elif not (isinstance(node, ast.Constant) and isinstance(node.value, (int, float))):
            raise ConfigError(f"unsupported syntax in {src!r}")

    check(tree)

    def ev(node, value):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, value), ev(node.right, value))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](ev(node.operand, value))
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](*(ev(a, value) for a in node.args))
        if isinstance(node, ast.Name):
            return value if node.id == var else _CONSTS[node.id]
        return node.value

    return lambda value: float(ev(tree.body, value))


def _time_function(src, base):
    """Number, expression string or path to a two-column CSV (t, value)."""
    if src is None:
        return lambda t: 0.0
    if isinstance(src, (int, float)):
        return lambda t, c=float(src): c
    if not isinstance(src, str):
        raise ConfigError(f"cannot interpret boundary datum {src!r}")
    path = src if os.path.isabs(src) else os.path.join(base, src)
    if src.endswith(".csv"):
        try:
            table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except OSError as exc:
            raise ConfigError(f"cannot read control file {path}: {exc}") from exc
        ts, vs = table[:, 0], table[:, 1]
        return lambda t: float(np.interp(t, ts, vs))
    return compile_expression(src)


def _is_zero_datum(src):
    return src is None or (isinstance(src, (int, float)) and src == 0)


# ---------------------------------------------------------------- commands

def _params(cfg):
    if cfg.L is not None:
        n = is_critical(cfg.L, 1e-6)
        if n is None:
            raise ConfigError(f"L = {cfg.L} is not a critical length (tolerance 1e-6)")
    elif cfg.n is not None:
        n = cfg.n
    else:
        raise ConfigError("this subcommand needs --n or --L")
    return solve_branch(n, tol=cfg.root_tol)


def cmd_lengths(cfg):
    rows = []
    for n in range(cfg.max_n + 1):
        p = scan_branch(n) if cfg.method == "scan" else solve_branch(n, tol=cfg.root_tol)
        rows.append(p)
    if cfg.format == "json":
        emit(cfg, to_json({"lengths": [p.as_dict() for p in rows]}, cfg))
    else:
        emit(cfg, to_csv(["n", "a", "b", "L", "q"], [(p.n, p.a, p.b, p.L, p.q) for p in rows]))


def cmd_params(cfg):
    emit(cfg, to_json(_params(cfg).as_dict(), cfg))


def cmd_omega_scan(cfg):
    p = _params(cfg)
    samples = omega_scan(p, cfg.Z, cfg.step, cfg.quad_tol)
    emit(cfg, to_csv(["z", "omega_value", "quad_error"],
                     [(s.z, s.omega_value, s.quad_error) for s in samples]))


def cmd_omega_min(cfg):
    p = _params(cfg)
    r = minimize_omega(p, cfg.Z, cfg.step, cfg.refine_tol, cfg.quad_tol)
    payload = {"n": p.n, "L": p.L, "a": p.a, "b": p.b, "q": p.q}
    payload.update(r.as_dict())
    emit(cfg, to_json(payload, cfg))


def cmd_phi(cfg):
    p = _params(cfg)
    x = np.linspace(0.0, p.L, cfg.samples)
    cols = [eval_profile(p, x, k) for k in range(4)]
    emit(cfg, to_csv(["x", "phi", "phi_x", "phi_xx", "phi_xxx"], zip(x, *cols)))


def _check(name, value, tol, passed=None):
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"name": name, "value": float(value), "tol": float(tol), "passed": ok}


def cmd_verify(cfg):
    p = _params(cfg)
    checks = []
    for key, val in p.invariant_residuals().items():
        checks.append(_check(f"branch_{key}", val, 1e-9))
    checks.append(_check("sign_condition", p.sign_condition(), 0.0, p.sign_condition() > 0))
    checks.append(_check("bracket", 0.0, 0.0, p.in_bracket()))
    rep = verify_profile(p)
    checks.append(_check("profile_boundary", rep.boundary_residual, rep.tol))
    checks.append(_check("profile_ode", rep.ode_residual, rep.tol))
    x = np.linspace(0.0, p.L, 100)
    phi = eval_profile(p, x)
    checks.append(_check("varphi_scale",
                         np.max(np.abs(eval_varphi(p, x) + 2j * phi)) / np.max(np.abs(phi)), 1e-10))
    scan = check_detQ_nonzero(p, cfg.Z, 0.05)
    checks.append(_check("detQ_min_modulus", scan.min_modulus, 1e-12, scan.ok))
    vieta = max(max(solve_depressed_cubic(complex(z, 0.5 * p.q)).vieta_residuals())
                for z in np.linspace(-cfg.Z, cfg.Z, 401))
    checks.append(_check("vieta", vieta, 1e-12))
    E = asymptotic_E(p)
    E_eta = asymptotic_E_from_eta(p)
    checks.append(_check("E_positive", E, 0.0, E > 0))
    checks.append(_check("E_cross_formula", abs(E_eta - E) / E, 1e-10))
    z = 1e4
    checks.append(_check("b_integral_asymptotic",
                         abs(z ** (1 / 3) * b_integral(z, p, cfg.quad_tol) - E) / E, 0.15))
    ok = all(c["passed"] for c in checks)
    emit(cfg, to_json({"n": p.n, "L": p.L, "passed": ok, "checks": checks}, cfg))
    return 0 if ok else 1


def _load_spec(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run spec {path}: {exc}") from exc


def build_simulation(spec, base="."):
    """Arguments for simulate_linear_kdv from a run-spec dictionary, plus the parameters if critical."""
    missing = [k for k in ("T", "dx", "dt") if k not in spec]
    if missing:
        raise ConfigError(f"run spec lacks {', '.join(missing)}")
    if ("L" in spec) == ("n" in spec):
        raise ConfigError("run spec needs exactly one of L and n")
    y0 = spec.get("y0", "zero")
    params = None
    if "n" in spec:
        params = solve_branch(int(spec["n"]))
        L = params.L
    else:
        L = float(spec["L"])
        n = is_critical(L, 1e-6)
        params = solve_branch(n) if n is not None else None
    if y0 == "phi":
        if params is None:
            raise ConfigError(f"y0 = 'phi' needs a critical length, got L = {L}")
        y0 = lambda x: eval_profile(params, x, 0)
    elif y0 == "zero":
        y0 = lambda x: np.zeros_like(x)
    elif isinstance(y0, list):
        y0 = np.asarray(y0, dtype=float)
    else:
        raise ConfigError("y0 must be 'phi', 'zero' or a list of samples")

    bc_spec = dict(spec.get("bc", {}))
    kind = bc_spec.get("third_kind", "neumann")
    if kind not in ("neumann", "second_derivative"):
        raise ConfigError(f"unknown third_kind {kind!r}")
    right = spec.get("control", bc_spec.get("right"))
    data = (bc_spec.get("left"), right, bc_spec.get("third"))
    bc = BoundarySpec(
        left=_time_function(data[0], base),
        right=_time_function(data[1], base),
        third=_time_function(data[2], base),
        third_kind=kind,
        homogeneous=all(_is_zero_datum(d) for d in data),
    )
    kwargs = {"L": L, "y0": y0, "bc": bc, "T": float(spec["T"]), "dx": float(spec["dx"]),
              "dt": float(spec["dt"]), "save_every": int(spec.get("save_every", 1))}
    return kwargs, params


def cmd_simulate(cfg):
    if not cfg.spec:
        raise ConfigError("simulate needs --spec FILE")
    spec = _load_spec(cfg.spec)
    kwargs, _ = build_simulation(spec, os.path.dirname(os.path.abspath(cfg.spec)))
    try:
        traj = simulate_linear_kdv(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    fmt = cfg.format or "csv"
    if fmt == "binary":
        emit(cfg, blob=to_binary(traj))
    elif fmt == "json":
        emit(cfg, to_json({"L": traj.L, "T": traj.T, "dx": traj.dx, "dt": traj.dt,
                           "t": traj.t, "x": traj.x, "frames": traj.frames.tolist()}, cfg))
    else:
        rows = ((t, x, y) for t, frame in zip(traj.t, traj.frames) for x, y in zip(traj.x, frame))
        emit(cfg, to_csv(["t", "x", "y"], rows))


COMMANDS = {
    "lengths": cmd_lengths,
    "params": cmd_params,
    "omega-scan": cmd_omega_scan,
    "omega-min": cmd_omega_min,
    "classify": cmd_omega_min,
    "phi": cmd_phi,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="kdvcrit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--format", choices=["csv", "json", "binary"])
    common.add_argument("--root-tol", dest="root_tol", type=float)
    common.add_argument("--quad-tol", dest="quad_tol", type=float)
    target = _Parser(add_help=False)
    target.add_argument("--n", type=int)
    target.add_argument("--L", type=float)
    scan = _Parser(add_help=False)
    scan.add_argument("--Z", type=float)
    scan.add_argument("--step", type=float)
    scan.add_argument("--refine-tol", dest="refine_tol", type=float)

    p = sub.add_parser("lengths", parents=[common], help="table of critical lengths")
    p.add_argument("--max-n", dest="max_n", type=int)
    p.add_argument("--method", choices=["bisect", "scan"])
    sub.add_parser("params", parents=[common, target], help="parameters of one branch")
    sub.add_parser("omega-scan", parents=[common, target, scan], help="Omega along the line")
    sub.add_parser("omega-min", parents=[common, target, scan], help="minimum of Omega")
    sub.add_parser("classify", parents=[common, target, scan], help="controllability verdict")
    p = sub.add_parser("phi", parents=[common, target], help="profile samples")
    p.add_argument("--samples", type=int)
    p = sub.add_parser("simulate", parents=[common], help="run the linear KdV simulator")
    p.add_argument("--spec", help="JSON run spec")
    sub.add_parser("verify", parents=[common, target, scan], help="invariant report")
    return parser


def _read_config_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def load_config(argv=None, environ=None):
    environ = os.environ if environ is None else environ
    args = vars(build_parser().parse_args(argv))
    merged = {}
    if environ.get("KDV_CONFIG"):
        merged.update(_read_config_file(environ["KDV_CONFIG"]))
    if args.get("config"):
        merged.update(_read_config_file(args["config"]))
    flags = {k: v for k, v in args.items() if v is not None and k != "config"}
    if "n" in flags or "L" in flags:
        merged.pop("n", None)
        merged.pop("L", None)
    merged.update(flags)
    merged["subcommand"] = args["subcommand"]
    try:
        cfg = RunConfig(**merged)
        cfg.validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def run_command(cfg):
    return COMMANDS[cfg.subcommand](cfg) or 0


def main(argv=None):
    try:
        cfg = load_config(argv)
        return run_command(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KdvCritError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Crank-Nicolson simulator for y_t + y_x + y_xxx = 0 on (0, L) and exact test solutions.

Grid x_i = i h, i = 0..N, with one ghost value on each side, so the unknown
vector is (y_{-1}, y_0, ..., y_N, y_{N+1}). Interior rows i = 1..N-1 use

    y_x   ~ (y_{i+1} - y_{i-1}) / (2h)
    y_xxx ~ (y_{i+2} - 2 y_{i+1} + 2 y_{i-1} - y_{i-2}) / (2h^3)

and the four remaining rows are algebraic constraints, imposed at every time level:

    row of y_{-1}:  sum_m (-1)^m C(5, m) y_{-1+m} = 0     (fifth difference vanishes)
    row of y_0:     y_0 = h1(t)
    row of y_N:     y_N = h2(t)
    row of y_{N+1}: one-sided 5-point stencil on offsets (+1, 0, -1, -2, -3) about N
                    giving y_x(L) = h3(t) or y_xx(L) = h3(t)

The system matrix does not depend on time, so it is LU-factored once.
"""
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Callable
import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import simpson

from .errors import InstabilityError, SingularStep
from .profile import eval_Phi, eval_profile

THIRD_KINDS = ("neumann", "second_derivative")
GROWTH_LIMIT = 1e6
EXTRAPOLATION_ORDER = 5
RIGHT_OFFSETS = (1, 0, -1, -2, -3)


def _zero(t):
    return 0.0


@dataclass(frozen=True)
class BoundarySpec:
    """y(t, 0) = left(t), y(t, L) = right(t) and y_x or y_xx at L equal to third(t)."""

    left: Callable[[float], float] = _zero
    right: Callable[[float], float] = _zero
    third: Callable[[float], float] = _zero
    third_kind: str = "neumann"
    homogeneous: bool = False

    def __post_init__(self):
        if self.third_kind not in THIRD_KINDS:
            raise ValueError(f"third_kind must be one of {THIRD_KINDS}")

    @classmethod
    def zero(cls, third_kind="neumann"):
        return cls(third_kind=third_kind, homogeneous=True)

    def values(self, t):
        return float(self.left(t)), float(self.right(t)), float(self.third(t))


@dataclass(frozen=True)
class Trajectory:
    L: float
    T: float
    dx: float
    dt: float
    x: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    frames: np.ndarray = field(repr=False)
    bc: BoundarySpec = field(repr=False)
    save_every: int = 1

    @property
    def final(self):
        return self.frames[-1]


def fd_weights(offsets, order):
    """Weights w with sum_k w_k f(x + o_k h) ~ h^order f^{(order)}(x)."""
    offs = np.asarray(offsets, dtype=float)
    A = np.array([offs**k / factorial(k) for k in range(len(offs))])
    rhs = np.zeros(len(offs))
    rhs[order] = 1.0
    return np.linalg.solve(A, rhs)


def _right_stencil(h, kind):
    order = 1 if kind == "neumann" else 2
    return fd_weights(RIGHT_OFFSETS, order) / h**order


def _left_extrapolation():
    return np.array([(-1) ** m * comb(EXTRAPOLATION_ORDER, m)
                     for m in range(EXTRAPOLATION_ORDER + 1)], dtype=float)


def _operators(N, h, dt, kind):
    """Factorized left-hand side and explicit right-hand side of one CN step."""
    n = N + 3
    i = np.arange(1, N)
    k = i + 1  # position of y_i in the extended vector
    c1, c3 = 1.0 / (2 * h), 1.0 / (2 * h**3)
    rows, cols, vals = [], [], []
    for off, c in ((1, c1), (-1, -c1), (2, c3), (1, -2 * c3), (-1, 2 * c3), (-2, -c3)):
        rows.append(k)
        cols.append(k + off)
        vals.append(np.full(i.size, c))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    interior = sp.diags(np.r_[0.0, 0.0, np.ones(N - 1), 0.0, 0.0])
    lhs = (interior + 0.5 * dt * A).tolil()
    rhs = (interior - 0.5 * dt * A).tocsr()

    for m, c in enumerate(_left_extrapolation()):
        lhs[0, m] = c
    lhs[1, 1] = 1.0
    lhs[N + 1, N + 1] = 1.0
    for o, c in zip(RIGHT_OFFSETS, _right_stencil(h, kind)):
        lhs[N + 2, N + 1 + o] = c
    try:
        lu = spla.splu(lhs.tocsc())
    except RuntimeError as exc:
        raise SingularStep(f"step matrix is singular: {exc}", step=0) from exc
    return lu, rhs


def _ghosts(U, N, h, kind, h3):
    """Fill both ghost values of U from the constraint rows."""
    co = _left_extrapolation()
    U[0] = -(co[1:] @ U[1:EXTRAPOLATION_ORDER + 1]) / co[0]
    w = _right_stencil(h, kind)
    rest = sum(c * U[N + 1 + o] for o, c in zip(RIGHT_OFFSETS[1:], w[1:]))
    U[N + 2] = (h3 - rest) / w[0]
    return U


def _check_compatibility(y0, bc, h):
    h1, h2, h3 = bc.values(0.0)
    order = 1 if bc.third_kind == "neumann" else 2
    # one-sided estimate of the third boundary quantity from the initial data
    third = float(fd_weights((0, -1, -2, -3, -4), order) @ y0[::-1][:5]) / h**order
    scale = max(1.0, float(np.max(np.abs(y0))))
    mismatches = []
    if abs(y0[0] - h1) > 1e-8 * scale:
        mismatches.append("y(0,0)")
    if abs(y0[-1] - h2) > 1e-8 * scale:
        mismatches.append("y(0,L)")
    if abs(third - h3) > (1e-4 + h * h) * max(scale, abs(h3)):
        mismatches.append("third condition")
    if mismatches:
        warnings.warn("initial data incompatible with boundary data at t=0: "
                      + ", ".join(mismatches), RuntimeWarning)


def grid_points(L, dx):
    N = int(round(L / dx))
    if N < 6:
        raise ValueError("grid needs at least 6 cells")
    return N, L / N


def simulate_linear_kdv(L, y0, bc, T, dx, dt, save_every=1):
    """March y_t + y_x + y_xxx = 0 from y0 under bc up to time T.

    y0 is a callable of x or an array of the N+1 grid values. The actual grid
    step is L / round(L / dx) and the number of steps round(T / dt). Every
    save_every-th time level is kept, always including t = 0 and t = T.
    """
    if not (L > 0 and T > 0 and dx > 0 and dt > 0):
        raise ValueError("L, T, dx and dt must be positive")
    if save_every < 1:
        raise ValueError("save_every must be at least 1")
    N, h = grid_points(L, dx)
    nt = int(round(T / dt))
    dt = T / nt
    x = np.linspace(0.0, L, N + 1)
    y_init = np.asarray(y0(x) if callable(y0) else y0, dtype=float)
    if y_init.shape != x.shape:
        raise ValueError(f"y0 must have {N + 1} grid values")
    if not np.all(np.isfinite(y_init)):
        raise ValueError("y0 must be finite")
    _check_compatibility(y_init, bc, h)

    lu, rhs = _operators(N, h, dt, bc.third_kind)
    U = np.zeros(N + 3)
    U[1:N + 2] = y_init
    _ghosts(U, N, h, bc.third_kind, bc.values(0.0)[2])

    limit = GROWTH_LIMIT * max(float(np.max(np.abs(y_init))), np.finfo(float).tiny)
    frames, times = [y_init.copy()], [0.0]
    for k in range(1, nt + 1):
        t = k * dt
        b = rhs @ U
        h1, h2, h3 = bc.values(t)
        b[0], b[1], b[N + 1], b[N + 2] = 0.0, h1, h2, h3
        U = lu.solve(b)
        y = U[1:N + 2]
        if not np.all(np.isfinite(y)):
            raise SingularStep(f"non-finite solution at step {k}", step=k)
        if bc.homogeneous and np.max(np.abs(y)) > limit:
            raise InstabilityError(f"sup-norm grew beyond {GROWTH_LIMIT:g}x at step {k}")
        if k % save_every == 0 or k == nt:
            frames.append(y.copy())
            times.append(t)
    return Trajectory(L=float(L), T=float(T), dx=h, dt=dt, x=x, t=np.array(times),
                      frames=np.array(frames), bc=bc, save_every=save_every)


def kdvb_modal_propagator(coeffs, t):
    """a_n(t) = exp((-3n^2 - i(4n - n^3)) t) a_n(0) for the periodic damped problem on [0, 2pi]."""
    out = {}
    for n, a in coeffs.items():
        if int(n) != n:
            raise ValueError(f"mode index must be an integer, got {n}")
        n = int(n)
        if n == 0:
            raise ValueError("mode 0 is excluded (mean-zero data)")
        out[n] = complex(a) * np.exp(complex(-3.0 * n * n, -(4.0 * n - n**3)) * t)
    return out


def manufactured_solution(modes, t, x, derivative=0):
    """x-derivative of y(t, x) = e^{2t - x} Re sum_n a_n(t) e^{inx}; x in [0, 2pi]."""
    if derivative not in (0, 1, 2, 3):
        raise ValueError("derivative must be 0, 1, 2 or 3")
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > 2 * np.pi * (1 + 1e-12)):
        raise ValueError("x must lie in [0, 2pi]")
    a = kdvb_modal_propagator(modes, t)
    total = np.zeros(x.shape, dtype=complex)
    for n, an in a.items():
        k = complex(-1.0, n)
        total = total + an * k**derivative * np.exp(k * x)
    out = np.exp(2.0 * t) * total.real
    return float(out) if out.ndim == 0 else out


def manufactured_boundary(modes, third_kind="neumann"):
    """Boundary data read off the manufactured solution on L = 2pi."""
    L = 2 * np.pi
    order = 1 if third_kind == "neumann" else 2
    return BoundarySpec(
        left=lambda t: manufactured_solution(modes, t, 0.0),
        right=lambda t: manufactured_solution(modes, t, L),
        third=lambda t: manufactured_solution(modes, t, L, order),
        third_kind=third_kind,
    )


def projection_invariant_check(traj, params, L_tol=1e-6):
    """Largest relative change of I(t) = int_0^L y Phi dx along the trajectory.

    The trajectory must use y(t,0) = 0 and y_x(t,L) = 0; y(t,L) is free.
    Drift is normalized by max(|I(0)|, sup|y| sup|Phi| L).
    """
    if abs(traj.L - params.L) > L_tol:
        raise ValueError(f"trajectory length {traj.L} is not the critical length {params.L}")
    bc = traj.bc
    if bc.third_kind != "neumann":
        raise ValueError("the invariant needs y_x(t, L) = 0 as the third condition")
    if any(abs(bc.left(t)) > 0 or abs(bc.third(t)) > 0 for t in traj.t):
        raise ValueError("the invariant needs y(t, 0) = 0 and y_x(t, L) = 0")
    Phi = eval_Phi(params, traj.t[:, None], traj.x[None, :])
    I = simpson(traj.frames * Phi, x=traj.x, axis=1)
    scale = float(np.max(np.abs(traj.frames)) * np.max(np.abs(Phi)) * traj.L)
    return float(np.max(np.abs(I - I[0])) / max(abs(I[0]), scale))


@dataclass(frozen=True)
class EigenmodeReport:
    rel_error: float
    growth_rate: float
    yx0_ratio: float
    trajectory: Trajectory = field(repr=False)


def _l2(y, h):
    return np.sqrt(h * np.sum(y * y, axis=-1))


def eigenmode_check(params, T=1.0, dx=None, dt=1e-4, save_every=1):
    """Simulate from y0 = phi with y(0) = y(L) = y_xx(L) = 0 and compare with e^{qt} phi.

    rel_error is the largest discrete L2 error relative to |e^{qt} phi|;
    growth_rate is log(|y(T)| / |y(0)|) / T; yx0_ratio is the largest
    |y_x(t, 0)| relative to e^{qt} sup|phi_x|.
    """
    dx = params.L / 400 if dx is None else dx
    phi = lambda x: eval_profile(params, x, 0)
    traj = simulate_linear_kdv(params.L, phi, BoundarySpec.zero("second_derivative"),
                               T, dx, dt, save_every)
    exact = eval_Phi(params, traj.t[:, None], traj.x[None, :])
    h = traj.dx
    rel = float(np.max(_l2(traj.frames - exact, h) / _l2(exact, h)))
    norms = _l2(traj.frames, h)
    growth = float(np.log(norms[-1] / norms[0]) / traj.t[-1])
    yx0 = (-3 * traj.frames[:, 0] + 4 * traj.frames[:, 1] - traj.frames[:, 2]) / (2 * h)
    sup_dphi = float(np.max(np.abs(eval_profile(params, traj.x, 1))))
    ratio = float(np.max(np.abs(yx0) / (np.exp(params.q * traj.t) * sup_dphi)))
    return EigenmodeReport(rel, growth, ratio, traj)

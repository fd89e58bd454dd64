"""The unreachable direction phi, its derivatives and the projection onto span{phi}.

    phi(x) = -beta e^{alpha x} cos(beta x) + beta e^{-2 alpha x} + 3 alpha e^{alpha x} sin(beta x)

is written as Re[(-beta - 3i alpha) e^{eta1 x}] + beta e^{eta3 x} with
eta1 = alpha + i beta, eta3 = -2 alpha, so the k-th derivative is exact:
Re[(-beta - 3i alpha) eta1^k e^{eta1 x}] + beta eta3^k e^{eta3 x}.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson


@dataclass(frozen=True)
class EtaTriplet:
    eta1: complex
    eta2: complex
    eta3: complex
    L: float

    def as_array(self):
        return np.array([self.eta1, self.eta2, self.eta3])

    def common_value(self):
        """eta_j e^{-eta_j L}; equal for j = 1, 2, 3 at a critical length."""
        return self.as_array() * np.exp(-self.as_array() * self.L)


@dataclass(frozen=True)
class ProfileReport:
    n: int
    boundary_residual: float
    ode_residual: float
    tol: float

    @property
    def passed(self):
        return self.boundary_residual < self.tol and self.ode_residual < self.tol


def _check_x(x, L):
    x = np.asarray(x, dtype=float)
    # allow rounding noise at the endpoints of a linspace grid
    if np.any(x < -1e-12 * L) or np.any(x > L * (1 + 1e-12)):
        raise ValueError(f"x must lie in [0, {L}]")
    return x


def eval_profile(params, x, order=0):
    """k-th derivative (k = 0..3) of phi at x; x may be an array."""
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0, 1, 2 or 3")
    x = _check_x(x, params.L)
    al, be = params.alpha, params.beta
    eta1 = complex(al, be)
    eta3 = -2.0 * al
    osc = np.real(complex(-be, -3.0 * al) * eta1**order * np.exp(eta1 * x))
    out = osc + be * eta3**order * np.exp(eta3 * x)
    return float(out) if out.ndim == 0 else out


def eval_Phi(params, t, x):
    """Phi(t, x) = e^{q t} phi(x)."""
    return np.exp(params.q * np.asarray(t, dtype=float)) * eval_profile(params, x, 0)


def eta_triplet(params):
    al, be = params.alpha, params.beta
    return EtaTriplet(complex(al, be), complex(al, -be), complex(-2.0 * al, 0.0), params.L)


def eval_varphi(params, x):
    """(eta3 - eta2) e^{eta1 x} + (eta1 - eta3) e^{eta2 x} + (eta2 - eta1) e^{eta3 x}."""
    x = _check_x(x, params.L)
    e = eta_triplet(params)
    return ((e.eta3 - e.eta2) * np.exp(e.eta1 * x)
            + (e.eta1 - e.eta3) * np.exp(e.eta2 * x)
            + (e.eta2 - e.eta1) * np.exp(e.eta3 * x))


def project_onto_MD(f, params, x=None):
    """Split a grid function into c*phi + remainder with <remainder, phi> = 0.

    f is sampled on a uniform grid over [0, L] (x defaults to that grid);
    inner products use composite Simpson. Returns (c, remainder).
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size < 3:
        raise ValueError("need a 1-D grid function with at least 3 points")
    if x is None:
        x = np.linspace(0.0, params.L, f.size)
    elif len(x) != f.size:
        raise ValueError("grid and samples have different lengths")
    phi = eval_profile(params, x, 0)
    c = simpson(f * phi, x=x) / simpson(phi * phi, x=x)
    return float(c), f - c * phi


def verify_profile(params, tol=1e-9, samples=1000):
    """Boundary and ODE residuals of phi on a uniform grid, relative to sup|phi|."""
    x = np.linspace(0.0, params.L, samples)
    d = [eval_profile(params, x, k) for k in range(4)]
    sup = np.max(np.abs(d[0]))
    boundary = max(
        abs(eval_profile(params, 0.0, 0)),
        abs(eval_profile(params, 0.0, 1)),
        abs(eval_profile(params, params.L, 0)),
        abs(eval_profile(params, params.L, 2)),
    ) / sup
    ode = np.max(np.abs(d[3] + d[1] + params.q * d[0])) / sup
    return ProfileReport(params.n, float(boundary), float(ode), tol)

"""The sign functional Omega along the line Im z = q/2 and the transfer quantities.

For complex s let lambda_j(s) be the roots of lambda^3 + lambda + i s = 0 and

    N(s, x) = sum_j (lambda_j e^{lambda_j L} - lambda_{j+1} e^{lambda_{j+1} L}) e^{lambda_{j+2} x}
    D(s)    = sum_j (lambda_{j+1} - lambda_j) e^{-lambda_{j+2} L}          (indices mod 3)

Omega(s) = int_0^L |N(s, x)|^2 phi_x(x) dx and the B-integral is Omega(s) / |D(s)|^2.
Both N and D are multiplied by e^{-m L}, m = max Re lambda_j, before use so that
the B-integral stays representable for large |z|; the factor is restored for Omega.
"""
from dataclasses import dataclass, field
from enum import Enum
import math
import warnings

import numpy as np

from .errors import DegenerateDenominator, DegenerateRoots, QuadratureFailure
from .profile import eta_triplet, eval_profile
from .quadrature import gauss_kronrod
from .roots import solve_depressed_cubic

GUARD = 1e-12
QUAD_TOL = 1e-10
QUAD_REL_TOL = 1e-10


class Controllability(str, Enum):
    ExactControllableFiniteTime = "locally exactly controllable in finite time"
    NotNullControllableAnyTime = "not locally null controllable in any positive time"


EXACT_CONTROLLABLE = Controllability.ExactControllableFiniteTime
NOT_NULL_CONTROLLABLE = Controllability.NotNullControllableAnyTime


@dataclass(frozen=True)
class OmegaSample:
    z: float
    omega_value: float
    quad_error: float


@dataclass(frozen=True)
class OmegaResult:
    omega: float
    z_star: float
    scan_range: tuple
    grid_step: float
    classification: Controllability
    samples: tuple = field(default=(), repr=False)

    def as_dict(self):
        return {
            "omega": self.omega,
            "z_star": self.z_star,
            "classification": self.classification.value,
            "scan": {"Z": self.scan_range[1], "step": self.grid_step},
        }


@dataclass(frozen=True)
class TransferQuantities:
    z: complex
    detQ: complex
    Xi: complex
    P_D: complex
    H: complex
    G_transfer: complex
    D_denominator: complex


@dataclass(frozen=True)
class DetQScan:
    min_modulus: float
    z_at_min: float
    ok: bool


def _cyc(lam):
    # (lambda_j, lambda_{j+1}, lambda_{j+2}) for j = 1, 2, 3
    return lam, np.roll(lam, -1), np.roll(lam, -2)


def numerator_G(z, x, L, roots=None):
    """N(z, x); x may be an array."""
    lam = (roots or solve_depressed_cubic(z)).as_array()
    l0, l1, l2 = _cyc(lam)
    coef = l0 * np.exp(l0 * L) - l1 * np.exp(l1 * L)
    x = np.asarray(x, dtype=float)
    return np.exp(np.multiply.outer(x, l2)) @ coef


def _scaled(s, L):
    """Roots, scale exponent m, coefficient vectors for e^{-mL} N and e^{-mL} D."""
    cr = solve_depressed_cubic(s)
    lam = cr.as_array()
    m = float(np.max(lam.real))
    l0, l1, l2 = _cyc(lam)
    coef = l0 * np.exp((l0 - m) * L) - l1 * np.exp((l1 - m) * L)
    D = np.sum((l1 - l0) * np.exp(-l2 * L - m * L))
    return cr, lam, m, coef, l2, D


def _scaled_integral(params, coef, expo, abs_tol, rel_tol):
    def integrand(x):
        N = np.exp(np.multiply.outer(x, expo)) @ coef
        return (N.real**2 + N.imag**2) * eval_profile(params, x, 1)

    return gauss_kronrod(integrand, 0.0, params.L, abs_tol=abs_tol, rel_tol=rel_tol,
                         initial=max(1, int(params.L)))


def omega_at(z, params, quad_tol=QUAD_TOL, rel_tol=QUAD_REL_TOL):
    """Omega(z + i q/2) for real z, by adaptive Gauss-Kronrod quadrature.

    The error target is max(quad_tol, rel_tol * |Omega|): far out on the line
    Omega is astronomically large and an absolute target alone is below its
    floating-point resolution.
    """
    s = complex(z, 0.5 * params.q)
    _, _, m, coef, expo, _ = _scaled(s, params.L)
    factor = math.exp(2.0 * m * params.L)
    value, err = _scaled_integral(params, coef, expo, quad_tol / factor, rel_tol)
    value, err = value * factor, err * factor
    if not (math.isfinite(value) and math.isfinite(err)):
        raise QuadratureFailure(f"Omega overflows at z = {z}")
    return OmegaSample(float(z), value, err)


def b_integral(z, params, quad_tol=QUAD_TOL, rel_tol=QUAD_REL_TOL):
    """int_0^L B(z + i q/2, x) dx = Omega(z + i q/2) / |D(z + i q/2)|^2."""
    s = complex(z, 0.5 * params.q)
    _, _, m, coef, expo, D = _scaled(s, params.L)
    d2 = abs(D) ** 2
    if abs(D) * math.exp(m * params.L) < GUARD:
        raise DegenerateDenominator(f"|D| below {GUARD:g} at z = {z}")
    value, _ = _scaled_integral(params, coef, expo, quad_tol * d2, rel_tol)
    return value / d2


def transfer_quantities(z, L):
    cr = solve_depressed_cubic(z)
    lam = cr.as_array()
    l0, l1, l2 = _cyc(lam)
    e = np.exp(lam * L)
    Q = np.array([np.ones(3), e, lam * e])
    detQ = complex(np.linalg.det(Q))
    Xi = complex((lam[1] - lam[0]) * (lam[2] - lam[0]) * (lam[2] - lam[1]))
    P_D = complex(np.sum(l0**2 * (l1 * np.exp(l1 * L) - l2 * np.exp(l2 * L))))
    D = complex(np.sum((l1 - l0) * np.exp(-l2 * L)))
    if abs(Xi) < GUARD:
        raise DegenerateRoots(f"repeated cubic roots at z = {z}")
    return TransferQuantities(complex(z), detQ, Xi, P_D, detQ / Xi, P_D / Xi, D)


def asymptotic_E(params):
    """E = -(b e^{2a} / (2 sqrt3 a L^2)) (b^2 + 9 a^2)."""
    a, b, L = params.a, params.b, params.L
    return -(b * math.exp(2.0 * a) / (2.0 * math.sqrt(3.0) * a * L * L)) * (b * b + 9.0 * a * a)


def asymptotic_E_from_eta(params):
    """E_D / (-2i) with E_D = (1/(sqrt3 A)) sum_j eta_{j+2}^2 (eta_{j+1} - eta_j).

    Complex; the imaginary part vanishes up to rounding.
    """
    e = eta_triplet(params)
    eta = e.as_array()
    A = e.eta3 * np.exp(-e.eta3 * params.L)
    e0, e1, e2 = _cyc(eta)
    E_D = np.sum(e2**2 * (e1 - e0)) / (math.sqrt(3.0) * A)
    return complex(E_D / (-2j))


def check_detQ_nonzero(params, Z=200.0, step=0.05):
    """min over the grid z in [-Z, Z] of |det Q(z + i q/2)|."""
    zs = np.linspace(-Z, Z, int(round(2 * Z / step)) + 1)
    mods = np.array([abs(transfer_quantities(complex(z, 0.5 * params.q), params.L).detQ)
                     for z in zs])
    i = int(np.argmin(mods))
    return DetQScan(float(mods[i]), float(zs[i]), bool(mods[i] >= GUARD))


INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, tol):
    """Minimize a unimodal f on [lo, hi] to an interval of width tol."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def omega_scan(params, Z=200.0, step=0.1, quad_tol=QUAD_TOL):
    zs = np.linspace(-Z, Z, int(round(2 * Z / step)) + 1)
    return [omega_at(z, params, quad_tol) for z in zs]


def minimize_omega(params, Z=200.0, coarse_step=0.1, refine_tol=1e-8, quad_tol=QUAD_TOL):
    """omega = min over real z of Omega(z + i q/2): coarse scan, then golden-section.

    Both signs of z are scanned. Every interior local minimum of the scan is
    refined on its two neighbouring grid cells.
    """
    if not (Z > 0 and coarse_step > 0 and refine_tol > 0):
        raise ValueError("Z, coarse_step and refine_tol must be positive")
    samples = omega_scan(params, Z, coarse_step, quad_tol)
    zs = np.array([s.z for s in samples])
    vals = np.array([s.omega_value for s in samples])
    best_i = int(np.argmin(vals))
    best_z, best_v = float(zs[best_i]), float(vals[best_i])
    if best_i in (0, len(zs) - 1):
        warnings.warn(f"Omega minimum sits on the scan boundary z = {best_z}", RuntimeWarning)
    f = lambda z: omega_at(z, params, quad_tol).omega_value
    interior = (vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])
    for i in np.nonzero(interior)[0] + 1:
        z, v = golden_section(f, zs[i - 1], zs[i + 1], refine_tol)
        if v < best_v:
            best_z, best_v = float(z), float(v)
    cls = EXACT_CONTROLLABLE if best_v < 0 else NOT_NULL_CONTROLLABLE
    return OmegaResult(best_v, best_z, (-Z, Z), coarse_step, cls, tuple(samples))

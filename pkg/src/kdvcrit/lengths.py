"""Critical lengths L_n of the Dirichlet-controlled linearized KdV system.

For each branch n the pair (a, b) solves

    b cos b + a sin b = 0,   b^2 = 4 a^2 (e^{-6a} - 1/4),   pi + 2n pi < b < 3pi/2 + 2n pi,

with a < 0, and then L^2 = b^2 - 3 a^2, q = -2a(a^2 + b^2)/L^3.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import ConvergenceFailure

ROOT_TOL = 1e-13
MAX_ITER = 200


@dataclass(frozen=True)
class CriticalLengthParams:
    n: int
    a: float
    b: float
    L: float
    q: float
    alpha: float
    beta: float

    @classmethod
    def from_a(cls, n, a):
        b = aux_b(a)
        L = math.sqrt(b * b - 3.0 * a * a)
        q = -2.0 * a * (a * a + b * b) / L**3
        return cls(n=n, a=a, b=b, L=L, q=q, alpha=-a / L, beta=-b / L)

    def invariant_residuals(self):
        """Scaled residuals of the defining relations (all should be tiny)."""
        a, b, L, q = self.a, self.b, self.L, self.q
        return {
            "phase": abs(b * math.cos(b) + a * math.sin(b)) / (abs(a) + abs(b)),
            "modulus": abs(a * a + b * b - 4.0 * a * a * math.exp(-6.0 * a)) / (a * a + b * b),
            "length": abs(L * L - (b * b - 3.0 * a * a)) / (L * L),
            "rate": abs(q - (-2.0 * a * (a * a + b * b) / L**3)) / q,
        }

    def sign_condition(self):
        return self.a * math.cos(self.b) - self.b * math.sin(self.b)

    def in_bracket(self):
        lo = math.pi + 2.0 * math.pi * self.n
        return lo < self.b < lo + 0.5 * math.pi

    def as_dict(self):
        return {"n": self.n, "a": self.a, "b": self.b, "L": self.L, "q": self.q,
                "alpha": self.alpha, "beta": self.beta}


def _check_negative(a):
    if not a < 0:
        raise ValueError(f"a must be negative, got {a}")


def aux_b(a):
    """B(a) = 2|a| sqrt(e^{-6a} - 1/4), the b attached to a given a < 0."""
    _check_negative(a)
    return 2.0 * abs(a) * math.sqrt(math.exp(-6.0 * a) - 0.25)


def branch_residual(a):
    """F(a) = B cos B + a sin B with B = aux_b(a)."""
    b = aux_b(a)
    return b * math.cos(b) + a * math.sin(b)


def _bisect(f, lo, hi, tol, max_iter):
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ConvergenceFailure(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise ConvergenceFailure(f"bisection did not reach {tol:g} in {max_iter} iterations")


def invert_aux_b(target):
    """The unique a < 0 with B(a) = target (B is strictly decreasing in a)."""
    if not target > 0:
        raise ValueError("target must be positive")
    hi = -1e-300
    lo = -1.0
    while aux_b(lo) < target:
        lo *= 2.0
    return _bisect(lambda a: aux_b(a) - target, lo, hi, 1e-16, MAX_ITER)


def branch_bracket(n):
    """a-interval on which B(a) sweeps (pi + 2n pi, 3pi/2 + 2n pi); ordered (lo, hi)."""
    if n < 0:
        raise ValueError("branch index must be non-negative")
    base = math.pi + 2.0 * math.pi * n
    return invert_aux_b(base + 0.5 * math.pi), invert_aux_b(base)


def solve_branch(n, bracket=None, tol=ROOT_TOL, max_iter=MAX_ITER):
    """Parameters of the n-th critical length, by bisection on F(a)."""
    lo, hi = branch_bracket(n) if bracket is None else bracket
    a = _bisect(branch_residual, lo, hi, tol, max_iter)
    return CriticalLengthParams.from_a(n, a)


@lru_cache(maxsize=None)
def _cached_branch(n):
    return solve_branch(n)


def is_critical(L_query, tol=1e-6):
    """Branch index n with |L_query - L_n| <= tol, or None."""
    if not L_query > 0 or not tol > 0:
        raise ValueError("L_query and tol must be positive")
    n = 0
    while True:
        L_n = _cached_branch(n).L
        if abs(L_query - L_n) <= tol:
            return n
        if L_n > L_query + tol:
            return None
        n += 1


def scan_branch(n, step=1e-6):
    """Fixed-step scan in a.

    Marches a downward from the upper end of the branch bracket on the grid
    of integer multiples of `step` and returns the parameters at the last grid
    point before F changes sign. The result is accurate only to `step` in a.
    """
    lo, hi = branch_bracket(n)
    k_hi = math.floor(hi / step)
    k_lo = math.ceil(lo / step)
    grid = np.arange(k_hi, k_lo - 1, -1) * step
    b = 2.0 * np.abs(grid) * np.sqrt(np.exp(-6.0 * grid) - 0.25)
    F = b * np.cos(b) + grid * np.sin(b)
    flips = np.nonzero(np.sign(F[1:]) != np.sign(F[0]))[0]
    if flips.size == 0:
        raise ConvergenceFailure(f"scan found no sign change for branch {n}")
    return CriticalLengthParams.from_a(n, float(grid[flips[0]]))

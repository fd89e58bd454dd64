"""Roots of the depressed cubic lambda^3 + lambda + i z = 0."""
from dataclasses import dataclass
from functools import cmp_to_key

import numpy as np

DEGENERACY_TOL = 1e-9

# mu_j = exp(-i pi/6 - 2 j i pi/3), j = 1, 2, 3; mu_j^3 = -i
MU = np.exp(-1j * np.pi / 6 - 2j * np.pi * np.arange(1, 4) / 3)


@dataclass(frozen=True)
class CubicRoots:
    z: complex
    lambdas: tuple
    degenerate: bool

    def as_array(self):
        return np.array(self.lambdas, dtype=complex)

    def vieta_residuals(self):
        """Relative residuals of the three symmetric-function identities."""
        l1, l2, l3 = self.lambdas
        scale = max(1.0, max(abs(l) for l in self.lambdas))
        return (
            abs(l1 + l2 + l3) / scale,
            abs(l1 * l2 + l2 * l3 + l3 * l1 - 1.0) / scale**2,
            abs(l1 * l2 * l3 + 1j * self.z) / scale**3,
        )


def _order(roots):
    scale = max(1.0, float(np.max(np.abs(roots))))
    tie = 1e-10 * scale

    def cmp(u, v):
        if abs(u.real - v.real) > tie:
            return -1 if u.real < v.real else 1
        if u.imag != v.imag:
            return -1 if u.imag < v.imag else 1
        return 0

    return sorted(roots, key=cmp_to_key(cmp))


def solve_depressed_cubic(z):
    """Three roots of lambda^3 + lambda + i z, sorted by real part.

    Companion-matrix eigenvalues followed by one Newton step per root. Roots
    whose real parts agree to 1e-10 (relative) are ordered by imaginary part.
    """
    z = complex(z)
    companion = np.array(
        [[0.0, -1.0, -1j * z], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], dtype=complex
    )
    lam = np.linalg.eigvals(companion)
    polished = []
    for r in lam:
        dp = 3.0 * r * r + 1.0
        if abs(dp) > 1e-14 * max(1.0, abs(r)) ** 2:
            r = r - (r**3 + r + 1j * z) / dp
        polished.append(complex(r))
    ordered = _order(polished)
    gaps = [abs(ordered[i] - ordered[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    return CubicRoots(z=z, lambdas=tuple(ordered), degenerate=min(gaps) < DEGENERACY_TOL)


def asymptotic_roots(z):
    """Large-z expansion mu_j z^{1/3} - z^{-1/3}/(3 mu_j) for real z > 0."""
    z = float(z)
    if not z > 0:
        raise ValueError(f"asymptotic_roots needs z > 0, got {z}")
    c = np.cbrt(z)
    return MU * c - 1.0 / (3.0 * MU * c)

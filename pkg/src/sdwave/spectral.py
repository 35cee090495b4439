"""Eigenstructure and semigroup components of the damped wave operator.

The spatial operator is A = -d²/dx² on (0,1) with homogeneous Dirichlet
boundary conditions, so the eigenpairs are closed-form:

    lambda_j = (j*pi)**2,   phi_j(x) = sqrt(2)*sin(j*pi*x),  j = 1, 2, ...

Writing the damped wave equation as a first-order system for X = (u, v)
and projecting on mode j gives the 2x2 generator

    A_j = [[0, -1], [lambda_j, alpha*lambda_j]],

whose exponential exp(-t*A_j) has entries s1..s4 expressible through the
roots of  z**2 - alpha*lambda*z + lambda = 0.  Everything here is scalar
per mode and precomputed once per (config, step size), so clarity wins
over vectorization.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# Relative root separation below which the distinct-root formulas are
# abandoned for the analytic double-root limits.
EPS_ROOT = 1e-6


def eigenvalue(j: int) -> float:
    """Eigenvalue lambda_j = (j*pi)**2 of the Dirichlet Laplacian on (0,1)."""
    if j < 1:
        raise ValueError(f"mode index must be >= 1, got {j}")
    return (j * math.pi) ** 2


def eigenfunction_value(j, x):
    """Orthonormal eigenfunction phi_j(x) = sqrt(2)*sin(j*pi*x), vectorized in x."""
    x = np.asarray(x)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("x must lie in [0, 1]")
    return math.sqrt(2.0) * np.sin(j * math.pi * x)


def mode_roots(lam: float, alpha: float) -> tuple[complex, complex]:
    """Roots (lambda_plus, lambda_minus) of z**2 - alpha*lam*z + lam = 0.

    Ordered so Re(lambda_plus) >= Re(lambda_minus).  In the real-root
    regime (alpha**2*lam >= 4) the larger root is computed by the
    quadratic formula (no cancellation: both terms positive) and the
    smaller via the product identity lambda_minus = lam / lambda_plus,
    which stays accurate when the discriminant is small.
    """
    if lam <= 0 or alpha <= 0:
        raise ValueError("lam and alpha must be positive")
    s = alpha * lam
    disc = s * s - 4.0 * lam
    if disc >= 0.0:
        plus = 0.5 * (s + math.sqrt(disc))
        return complex(plus), complex(lam / plus)
    half = 0.5 * math.sqrt(-disc)
    return complex(0.5 * s, half), complex(0.5 * s, -half)


@dataclass(frozen=True)
class ModeData:
    """Per-mode constants: eigenvalue, quadratic roots, noise eigenvalue.

    The damping coefficient is implicit: alpha*lambda equals
    Re(root_plus + root_minus), which is all the formulas need.
    """

    j: int
    lam: float
    root_plus: complex
    root_minus: complex
    gamma: float

    @property
    def degenerate(self) -> bool:
        """True when the roots are too close for the distinct-root formulas."""
        return abs(self.root_plus - self.root_minus) < EPS_ROOT * self.alpha_lam

    @property
    def alpha_lam(self) -> float:
        return (self.root_plus + self.root_minus).real


def make_mode(j: int, alpha: float, gamma: float = 0.0) -> ModeData:
    lam = eigenvalue(j)
    plus, minus = mode_roots(lam, alpha)
    return ModeData(j=j, lam=lam, root_plus=plus, root_minus=minus, gamma=gamma)


def make_modes(alpha: float, n_modes: int, gammas=None) -> list[ModeData]:
    """First n_modes ModeData entries; gammas is an optional array of
    noise eigenvalues (default 0: noise absent)."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if gammas is None:
        gammas = np.zeros(n_modes)
    return [make_mode(j, alpha, float(gammas[j - 1])) for j in range(1, n_modes + 1)]


class SemigroupMatrix(NamedTuple):
    """Entries of exp(-t*A_j) for one mode: [[s1, s2], [s3, s4]]."""

    s1: float
    s2: float
    s3: float
    s4: float


def semigroup_coeffs(mode: ModeData, t: float) -> SemigroupMatrix:
    """The four semigroup components of mode j at time t >= 0.

    Distinct roots a = lambda_minus, b = lambda_plus:

        s1 = (b*exp(-t*a) - a*exp(-t*b)) / (b - a)
        s2 = (exp(-t*a) - exp(-t*b)) / (b - a)
        s3 = lam * (exp(-t*b) - exp(-t*a)) / (b - a)
        s4 = (b*exp(-t*b) - a*exp(-t*a)) / (b - a)

    evaluated in complex arithmetic (conjugate roots cancel to real
    values; the real part is returned).  Within EPS_ROOT*alpha*lam of
    the double root r = alpha*lam/2 the limit formulas are used:

        exp(-t*A_j) = exp(-r*t) * (I - t*(A_j - r*I))
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return SemigroupMatrix(1.0, 0.0, 0.0, 1.0)
    b = mode.root_plus
    a = mode.root_minus
    if mode.degenerate:
        r = 0.5 * mode.alpha_lam
        e = math.exp(-r * t)
        return SemigroupMatrix(
            e * (1.0 + r * t), t * e, -mode.lam * t * e, e * (1.0 - r * t)
        )
    ea = cmath.exp(-t * a)
    eb = cmath.exp(-t * b)
    d = b - a
    return SemigroupMatrix(
        ((b * ea - a * eb) / d).real,
        ((ea - eb) / d).real,
        (mode.lam * (eb - ea) / d).real,
        ((b * eb - a * ea) / d).real,
    )


def semigroup_imag_residue(mode: ModeData, t: float) -> float:
    """Largest imaginary part left over before taking real parts.

    Diagnostic for the complex-root cancellation; ~1e-16 in practice.
    """
    if t <= 0 or mode.degenerate:
        return 0.0
    b, a = mode.root_plus, mode.root_minus
    ea, eb = cmath.exp(-t * a), cmath.exp(-t * b)
    d = b - a
    vals = [(b * ea - a * eb) / d, (ea - eb) / d,
            mode.lam * (eb - ea) / d, (b * eb - a * ea) / d]
    return max(abs(z.imag) for z in vals)


def semigroup_table(modes: list[ModeData], t: float) -> np.ndarray:
    """Stacked coefficients for a mode list: array of shape (4, N)."""
    out = np.empty((4, len(modes)))
    for i, m in enumerate(modes):
        out[:, i] = semigroup_coeffs(m, t)
    return out

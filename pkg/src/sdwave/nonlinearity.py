"""Nemytskii operator evaluation in spectral coefficient space.

The composition operator F(u)(x) = f(x, u(x)) is applied by collocation
on the uniform sine grid x_i = i/(N_q+1), i = 1..N_q:

    synthesize : coeffs -> point values   u(x_i) = sum_j c_j sqrt(2) sin(j pi x_i)
    analyze    : point values -> coeffs   c_j = (1/(N_q+1)) sum_i v(x_i) phi_j(x_i)

The discrete sine quadrature underlying ``analyze`` is exact for
band-limited integrands with at most N_q modes, so the roundtrip
analyze(synthesize(c)) = c holds exactly for N <= (N_q-1)/2.  Both maps
are realized with a type-I DST; the contract is the summation formula,
not the transform algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft

from .errors import NonFiniteValue

_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class NemytskiiSpec:
    """Pointwise map f(x, z) with its Lipschitz bound in z.

    quadrature_points fixes N_q; None selects 4N+1 per call (oversampling
    factor >= 4 suppresses aliasing from the nonlinear products).
    """

    f: Callable
    lipschitz_bound: float
    quadrature_points: int | None = None
    name: str = "custom"


def _benchmark_f(x, z):
    return (1.0 - z) / (1.0 + z * z)


#: The convergence-study nonlinearity f(z) = (1-z)/(1+z^2).  Its Lipschitz
#: bound is sup|f'| = |f'(2 - sqrt(3))| = 1.2745...
BENCHMARK_NONLINEARITY = NemytskiiSpec(
    f=_benchmark_f, lipschitz_bound=1.275, name="benchmark"
)


def default_quadrature_points(n_modes: int) -> int:
    return 4 * n_modes + 1


def collocation_grid(n_quad: int) -> np.ndarray:
    """Nodes x_i = i/(N_q+1), i = 1..N_q."""
    return np.arange(1, n_quad + 1) / (n_quad + 1)


def synthesize(coeffs: np.ndarray, n_quad: int) -> np.ndarray:
    """Point values of sum_j coeffs_j * phi_j on the collocation grid."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.shape[0]
    if n > n_quad:
        raise ValueError(f"need n_quad >= {n}, got {n_quad}")
    padded = np.zeros(n_quad)
    padded[:n] = coeffs
    # DST-I gives 2*sum a_n sin(pi (k+1)(n+1)/(Nq+1)); phi has sqrt(2), not 2
    return scipy.fft.dst(padded, type=1) * _SQRT_HALF


def analyze(values: np.ndarray, n_out: int, n_quad: int | None = None) -> np.ndarray:
    """First n_out sine coefficients by the discrete sine quadrature."""
    values = np.asarray(values, dtype=float)
    if n_quad is None:
        n_quad = values.shape[0]
    if values.shape[0] != n_quad:
        raise ValueError("values must be given on the full collocation grid")
    if n_out > n_quad:
        raise ValueError(f"cannot produce {n_out} coefficients from {n_quad} nodes")
    return scipy.fft.dst(values, type=1)[:n_out] * (_SQRT_HALF / (n_quad + 1))


def apply_nemytskii(
    coeffs: np.ndarray, spec: NemytskiiSpec, n_quad: int | None = None
) -> np.ndarray:
    """Coefficients of P_N F(u): analyze(f(x, synthesize(u)))."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.shape[0]
    if n_quad is None:
        n_quad = spec.quadrature_points or default_quadrature_points(n)
    values = spec.f(collocation_grid(n_quad), synthesize(coeffs, n_quad))
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue(
            f"nonlinearity {spec.name!r} produced non-finite point values"
        )
    return analyze(values, n, n_quad)


def make_nemytskii(spec: NemytskiiSpec | None, n_modes: int) -> Callable | None:
    """Closure evaluating P_N F for the time march; None disables F.

    The grid and padding buffer are hoisted out of the per-step path.
    """
    if spec is None:
        return None
    n_quad = spec.quadrature_points or default_quadrature_points(n_modes)
    if n_quad < 2 * n_modes + 1:
        raise ValueError(
            f"quadrature_points {n_quad} below the roundtrip minimum "
            f"{2 * n_modes + 1} for N={n_modes}"
        )
    grid = collocation_grid(n_quad)
    padded = np.zeros(n_quad)
    scale_out = _SQRT_HALF / (n_quad + 1)
    f = spec.f

    name = spec.name

    def eval_f(coeffs: np.ndarray) -> np.ndarray:
        padded[:n_modes] = coeffs
        values = f(grid, scipy.fft.dst(padded, type=1) * _SQRT_HALF)
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue(
                f"nonlinearity {name!r} produced non-finite point values"
            )
        return scipy.fft.dst(values, type=1)[:n_modes] * scale_out

    return eval_f

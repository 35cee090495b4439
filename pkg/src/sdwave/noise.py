"""Exact law and sampling of the per-mode stochastic increments.

For one mode with roots a = lambda_minus, b = lambda_plus and noise
eigenvalue gamma, one time step of size k carries three jointly Gaussian
scalars driven by the same Brownian increment:

    eta    = Ito integral of s2(k - s) dBeta(s)   (stochastic convolution, u-row)
    etahat = Ito integral of s4(k - s) dBeta(s)   (stochastic convolution, v-row)
    dw     = Beta(k) - Beta(0)                    (plain Wiener increment)

all scaled by sqrt(gamma).  The Ito isometry turns every entry of their
covariance matrix into an integral of products of the semigroup
components over [0, k]; those integrals have elementary closed forms
which are implemented here and cross-checked by a quadrature oracle
built on nothing but ``semigroup_coeffs``.

Sampling is counter-based: the stream for one Monte-Carlo sample is a
Philox generator keyed by (master seed, sample index), and step m draws
from the counter block [0, 0, m, 0].  Mode at list position i always
consumes raw words 3i, 3i+1, 3i+2 of the step's block, so a draw depends
only on (seed, sample, step, mode position) and never on thread
scheduling or the number of modes requested.
"""

from __future__ import annotations

import math
import warnings
from cmath import exp as cmath_exp
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.random import Philox
from scipy.special import ndtri

from .errors import NonFiniteValue, NotPositiveSemidefinite
from .spectral import ModeData, semigroup_coeffs

_MASK64 = (1 << 64) - 1
_INV_2_53 = 2.0 ** -53
_CHUNK_STEPS = 2048


@dataclass(frozen=True)
class NoiseSpec:
    """Covariance operator Q of the driving noise.

    kind "white" is Q = I (gamma_j = 1); kind "fractional_power" is
    Q = A**(-exponent) (gamma_j = lambda_j**(-exponent)).

    regularity_gamma is the noise-regularity parameter used for rate
    prediction only.  In 1D the Hilbert-Schmidt condition requires
    gamma < exponent + 1/2; the default sits just below that supremum.
    """

    kind: str
    exponent: float = 0.0
    regularity_gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("white", "fractional_power"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "white" and self.exponent != 0.0:
            raise ValueError("white noise means exponent 0")
        if self.exponent < 0:
            raise ValueError("exponent must be >= 0")
        if self.regularity_gamma is None:
            object.__setattr__(self, "regularity_gamma", self.exponent + 0.4995)
        if not (-1.0 < self.regularity_gamma <= 2.0):
            raise ValueError("regularity_gamma must lie in (-1, 2]")
        if self.regularity_gamma >= self.exponent + 0.5:
            warnings.warn(
                "regularity_gamma %.4f is inconsistent with exponent %.4f in 1D "
                "(requires gamma < exponent + 1/2)"
                % (self.regularity_gamma, self.exponent),
                stacklevel=2,
            )


def noise_gammas(spec: NoiseSpec | None, lams) -> np.ndarray:
    """Noise eigenvalues gamma_j for the given eigenvalues; zeros if spec is None."""
    lams = np.asarray(lams, dtype=float)
    if spec is None:
        return np.zeros_like(lams)
    if spec.kind == "white":
        return np.ones_like(lams)
    return lams ** (-spec.exponent)


@dataclass(frozen=True)
class IncrementCovariance:
    """Second moments of (eta, etahat, dw) for one mode and one step."""

    var_eta: float
    var_etahat: float
    var_dw: float
    cov_eta_etahat: float
    cov_eta_dw: float
    cov_etahat_dw: float

    def as_matrix(self, dims: int = 3) -> np.ndarray:
        """Covariance matrix in the order (eta, etahat[, dw])."""
        if dims == 2:
            return np.array(
                [
                    [self.var_eta, self.cov_eta_etahat],
                    [self.cov_eta_etahat, self.var_etahat],
                ]
            )
        if dims == 3:
            return np.array(
                [
                    [self.var_eta, self.cov_eta_etahat, self.cov_eta_dw],
                    [self.cov_eta_etahat, self.var_etahat, self.cov_etahat_dw],
                    [self.cov_eta_dw, self.cov_etahat_dw, self.var_dw],
                ]
            )
        raise ValueError("dims must be 2 or 3")


def _one_minus_exp(z):
    """1 - exp(-z); expm1-accurate whenever z is real (possibly as 0j-complex)."""
    if isinstance(z, complex):
        if z.imag == 0.0:
            return complex(-math.expm1(-z.real))
        return -(cmath_exp(-z) - 1.0)
    return -math.expm1(-z)


def increment_covariance(mode: ModeData, k: float) -> IncrementCovariance:
    """Closed-form covariance of (eta, etahat, dw) over one step of size k.

    Distinct roots a = lambda_minus, b = lambda_plus:

        var_eta        = g/(b-a)^2 [ (1-e^{-2ka})/(2a) + (1-e^{-2kb})/(2b)
                                     - 2(1-e^{-k(a+b)})/(a+b) ]
        var_etahat     = g/(b-a)^2 [ b(1-e^{-2kb})/2 + a(1-e^{-2ka})/2
                                     - 2ab(1-e^{-k(a+b)})/(a+b) ]
        cov_eta_etahat = g/(b-a)^2 [ (e^{-2kb}+e^{-2ka})/2 - e^{-k(a+b)} ]
        cov_eta_dw     = g/(b-a)   [ (1-e^{-ka})/a - (1-e^{-kb})/b ]
        cov_etahat_dw  = g (e^{-ka}-e^{-kb})/(b-a)          ( = g*s2(k) )
        var_dw         = g*k

    Complex-conjugate roots use the same expressions in complex
    arithmetic (the imaginary parts cancel); near the double root
    r = (a+b)/2 the analytic limits are used instead.  When
    k*max(alpha*lambda, sqrt(lambda)) <= 1/2 all entries are summed
    from the power series of s2 instead (valid for any root
    configuration), because the exponential-difference forms lose
    precision to cancellation as k -> 0.  Two identities are used
    throughout: cov_etahat_dw = g*s2(k) and, since s4 = s2',
    cov_eta_etahat = g*s2(k)^2/2.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    g = mode.gamma
    if g == 0.0:
        return IncrementCovariance(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    if k * max(mode.alpha_lam, math.sqrt(mode.lam)) <= 0.5:
        cov = _covariance_series(mode, k, g)
        _check_finite_cov(cov, mode, k)
        return cov
    b = mode.root_plus
    a = mode.root_minus
    if mode.degenerate:
        # exp(-t*A_j) = e^{-rt}(I - t(A_j - rI)): s2 = t e^{-rt},
        # s4 = (1 - rt) e^{-rt}; all six integrals are elementary.
        r = 0.5 * mode.alpha_lam
        c = 2.0 * r
        ekc = math.exp(-c * k)
        i0 = -math.expm1(-c * k) / c
        i1 = 1.0 / c ** 2 - ekc * (k / c + 1.0 / c ** 2)
        i2 = 2.0 / c ** 3 - ekc * (k * k / c + 2.0 * k / c ** 2 + 2.0 / c ** 3)
        ekr = math.exp(-r * k)
        cov = IncrementCovariance(
            var_eta=g * i2,
            var_etahat=g * (i0 - 2.0 * r * i1 + r * r * i2),
            var_dw=g * k,
            cov_eta_etahat=g * (i1 - r * i2),
            cov_eta_dw=g * (1.0 / r ** 2 - ekr * (k / r + 1.0 / r ** 2)),
            cov_etahat_dw=g * k * ekr,
        )
    else:
        d2 = (b - a) * (b - a)
        apb = a + b
        ve = (g / d2) * (
            _one_minus_exp(2.0 * k * a) / (2.0 * a)
            + _one_minus_exp(2.0 * k * b) / (2.0 * b)
            - 2.0 * _one_minus_exp(k * apb) / apb
        )
        vh = (g / d2) * (
            b * _one_minus_exp(2.0 * k * b) / 2.0
            + a * _one_minus_exp(2.0 * k * a) / 2.0
            - 2.0 * a * b * _one_minus_exp(k * apb) / apb
        )
        ced = (g / (b - a)) * (
            _one_minus_exp(k * a) / a - _one_minus_exp(k * b) / b
        )
        ba = b - a
        if ba.imag != 0.0:
            # conjugate pair r +/- iw: s2(k) = e^{-rk} sin(wk)/w
            s2k = math.exp(-0.5 * apb.real * k) * math.sin(0.5 * ba.imag * k) / (
                0.5 * ba.imag
            )
        else:
            s2k = math.exp(-k * a.real) * (-math.expm1(-k * ba.real)) / ba.real
        cov = IncrementCovariance(
            var_eta=complex(ve).real,
            var_etahat=complex(vh).real,
            var_dw=g * k,
            cov_eta_etahat=0.5 * g * s2k * s2k,
            cov_eta_dw=complex(ced).real,
            cov_etahat_dw=g * s2k,
        )
    _check_finite_cov(cov, mode, k)
    return cov


def _check_finite_cov(cov: IncrementCovariance, mode: ModeData, k: float) -> None:
    for name, value in (
        ("var_eta", cov.var_eta),
        ("var_etahat", cov.var_etahat),
        ("var_dw", cov.var_dw),
        ("cov_eta_etahat", cov.cov_eta_etahat),
        ("cov_eta_dw", cov.cov_eta_dw),
        ("cov_etahat_dw", cov.cov_etahat_dw),
    ):
        if not math.isfinite(value):
            raise NonFiniteValue(
                f"{name} is not finite for mode j={mode.j}, k={k}"
            )


def _covariance_series(mode: ModeData, k: float, g: float) -> IncrementCovariance:
    """Small-step covariance from the power series of s2.

    s2 solves s2'' + p s2' + q s2 = 0 with s2(0) = 0, s2'(0) = 1 for
    p = alpha*lambda, q = lambda, and s4 = s2'.  With k*max(p, sqrt(q))
    <= 1/2 the series terms decay factorially, so truncation at 26
    terms is far below machine precision.
    """
    p = mode.alpha_lam
    q = mode.lam
    n = 26
    c = [0.0, 1.0]
    for m in range(n - 2):
        c.append(-(p * (m + 1) * c[m + 1] + q * c[m]) / ((m + 2) * (m + 1)))
    c = np.array(c)
    d = np.empty_like(c)  # s4 = s2'
    d[:-1] = c[1:] * np.arange(1, n)
    d[-1] = 0.0
    powers = k ** np.arange(2 * n, dtype=float)
    s2k = float(c @ powers[:n])
    int_s2 = float((c / np.arange(1.0, n + 1.0)) @ powers[1 : n + 1])
    cc = np.convolve(c, c)
    int_s2sq = float((cc / np.arange(1.0, 2.0 * n)) @ powers[1 : 2 * n])
    dd = np.convolve(d, d)
    int_s4sq = float((dd / np.arange(1.0, 2.0 * n)) @ powers[1 : 2 * n])
    return IncrementCovariance(
        var_eta=g * int_s2sq,
        var_etahat=g * int_s4sq,
        var_dw=g * k,
        cov_eta_etahat=0.5 * g * s2k * s2k,
        cov_eta_dw=g * int_s2,
        cov_etahat_dw=g * s2k,
    )


_GL_NODES, _GL_WEIGHTS = leggauss(64)


def covariance_quadrature_oracle(mode: ModeData, k: float) -> IncrementCovariance:
    """Covariance entries by direct quadrature of the Ito-isometry integrals.

    Integrates products of {s2, s4, 1} over [0, k] with 64-node
    Gauss-Legendre on geometrically graded panels; the grading resolves
    the exp(-s*lambda_plus) boundary layer for stiff modes.  Uses only
    ``semigroup_coeffs``, so it checks the closed forms independently.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    g = mode.gamma
    if g == 0.0:
        return IncrementCovariance(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    rate = max(mode.root_plus.real, 1.0)
    n_panels = max(0, math.ceil(math.log2(max(rate * k, 1.0)))) + 6
    edges = [0.0] + [k * 2.0 ** (-p) for p in range(n_panels, -1, -1)]
    acc = np.zeros(5)  # s2*s2, s4*s4, s2*s4, s2, s4
    for lo, hi in zip(edges[:-1], edges[1:]):
        s_vals = 0.5 * (hi - lo) * _GL_NODES + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * _GL_WEIGHTS
        s2 = np.empty_like(s_vals)
        s4 = np.empty_like(s_vals)
        for i, s in enumerate(s_vals):
            coeffs = semigroup_coeffs(mode, s)
            s2[i] = coeffs.s2
            s4[i] = coeffs.s4
        acc[0] += np.dot(w, s2 * s2)
        acc[1] += np.dot(w, s4 * s4)
        acc[2] += np.dot(w, s2 * s4)
        acc[3] += np.dot(w, s2)
        acc[4] += np.dot(w, s4)
    return IncrementCovariance(
        var_eta=g * acc[0],
        var_etahat=g * acc[1],
        var_dw=g * k,
        cov_eta_etahat=g * acc[2],
        cov_eta_dw=g * acc[3],
        cov_etahat_dw=g * acc[4],
    )


def cholesky(cov, dims: int = 3) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T equal to the covariance.

    Accepts an IncrementCovariance or a symmetric matrix.  Pivots that
    come out negative by no more than 1e-13 * max-entry (roundoff of a
    nearly rank-deficient matrix, e.g. tiny k where eta is almost a
    deterministic function of dw) are clamped to zero; anything more
    negative raises NotPositiveSemidefinite, signalling a formula bug.
    """
    if isinstance(cov, IncrementCovariance):
        a = cov.as_matrix(dims)
    else:
        a = np.asarray(cov, dtype=float)
        if a.shape != (dims, dims):
            raise ValueError(f"expected a {dims}x{dims} matrix, got {a.shape}")
    scale = float(np.max(np.abs(a)))
    tol = 1e-13 * scale
    if not np.all(np.abs(a - a.T) <= tol):
        raise ValueError("covariance matrix is not symmetric")
    n = dims
    low = np.zeros((n, n))
    for i in range(n):
        pivot = a[i, i] - np.dot(low[i, :i], low[i, :i])
        if pivot < -tol:
            raise NotPositiveSemidefinite(
                f"pivot {pivot:.3e} at index {i} below -{tol:.3e}"
            )
        if pivot <= 0.0:
            continue  # clamped: row i of L stays partially filled, column zero
        low[i, i] = math.sqrt(pivot)
        for r in range(i + 1, n):
            low[r, i] = (a[r, i] - np.dot(low[r, :i], low[i, :i])) / low[i, i]
    return low


def increment_factors(modes: list[ModeData], k: float) -> np.ndarray:
    """Packed Cholesky factors for a mode list: array (N, 6) holding
    (l00, l10, l11, l20, l21, l22) per mode."""
    out = np.empty((len(modes), 6))
    for i, mode in enumerate(modes):
        low = cholesky(increment_covariance(mode, k), dims=3)
        out[i] = (low[0, 0], low[1, 0], low[1, 1], low[2, 0], low[2, 1], low[2, 2])
    return out


class NoiseTriple(NamedTuple):
    """Per-mode arrays of the three joint increments for one step."""

    eta: np.ndarray
    etahat: np.ndarray
    dw: np.ndarray


class NoiseStream:
    """Deterministic random stream for one (master seed, sample index)."""

    def __init__(self, seed: int, sample_index: int):
        if seed < 0 or sample_index < 0:
            raise ValueError("seed and sample_index must be nonnegative")
        self.seed = seed
        self.sample_index = sample_index

    def _philox(self) -> Philox:
        return Philox(
            counter=[0, 0, 0, 0],
            key=[self.seed & _MASK64, self.sample_index & _MASK64],
        )


def generate_increments(
    factors: np.ndarray,
    stream: NoiseStream,
    n_steps: int,
    *,
    first_step: int = 0,
    with_dw: bool = True,
):
    """Increments for steps [first_step, first_step + n_steps).

    Returns (eta, etahat, dw) arrays of shape (n_steps, N); dw is None
    when with_dw is False (the dw normal variates are then skipped, but
    eta and etahat are unchanged since they use the first two variates).
    """
    n = factors.shape[0]
    eta = np.empty((n_steps, n))
    etahat = np.empty((n_steps, n))
    dw = np.empty((n_steps, n)) if with_dw else None
    bg = stream._philox()
    state = bg.state
    counter = state["state"]["counter"]
    l00 = factors[:, 0]
    l10, l11 = factors[:, 1], factors[:, 2]
    l20, l21, l22 = factors[:, 3], factors[:, 4], factors[:, 5]
    for c0 in range(0, n_steps, _CHUNK_STEPS):
        c1 = min(c0 + _CHUNK_STEPS, n_steps)
        words = np.empty((c1 - c0, n, 3), dtype=np.uint64)
        for m in range(c0, c1):
            counter[0] = 0
            counter[1] = 0
            counter[2] = first_step + m
            counter[3] = 0
            bg.state = state
            words[m - c0] = bg.random_raw(3 * n).reshape(n, 3)
        ncols = 3 if with_dw else 2
        # top 53 bits, centered: uniform on (0,1) excluding both endpoints
        u = (
            np.right_shift(words[..., :ncols], np.uint64(11)).astype(np.float64)
            + 0.5
        ) * _INV_2_53
        z = ndtri(u)
        z0, z1 = z[..., 0], z[..., 1]
        eta[c0:c1] = l00 * z0
        etahat[c0:c1] = l10 * z0 + l11 * z1
        if with_dw:
            dw[c0:c1] = (l20 * z0 + l21 * z1) + l22 * z[..., 2]
    return eta, etahat, dw


def sample_increments(
    modes: list[ModeData],
    k: float,
    step_index: int,
    stream: NoiseStream,
    factors: np.ndarray | None = None,
) -> NoiseTriple:
    """Joint (eta, etahat, dw) draw for every mode at one step.

    Pass precomputed ``increment_factors(modes, k)`` when calling in a
    loop; without it the factors are rebuilt on every call.
    """
    if factors is None:
        factors = increment_factors(modes, k)
    eta, etahat, dw = generate_increments(
        factors, stream, 1, first_step=step_index, with_dw=True
    )
    return NoiseTriple(eta[0], etahat[0], dw[0])

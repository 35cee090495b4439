"""Self-check suite: analytic identities gated behind numerical oracles.

Each check walks a deterministic stress grid and reports its worst
deviation against a fixed tolerance.  The covariance check accepts an
injectable closed-form implementation so the failure path is testable
with a deliberately corrupted formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import (
    cholesky,
    covariance_quadrature_oracle,
    increment_covariance,
)
from .nonlinearity import analyze, collocation_grid, default_quadrature_points, synthesize
from .spectral import make_mode, mode_roots, semigroup_coeffs

GRID_MODES = (1, 2, 4, 16, 64, 256)
GRID_ALPHAS = (0.1, 1.0, 10.0)
GRID_STEPS = (2.0 ** -2, 2.0 ** -6, 2.0 ** -10)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""


def _result(name, worst, tol, detail=""):
    return CheckResult(name, worst <= tol, float(worst), tol, detail)


def check_root_identities() -> CheckResult:
    """Vieta's formulas: the mode roots sum to alpha*lambda and multiply
    to lambda."""
    worst = 0.0
    detail = ""
    for alpha in GRID_ALPHAS:
        for j in GRID_MODES:
            lam = (j * math.pi) ** 2
            plus, minus = mode_roots(lam, alpha)
            dev = max(
                abs((plus + minus) - alpha * lam) / (alpha * lam),
                abs(plus * minus - lam) / lam,
            )
            if dev > worst:
                worst, detail = dev, f"j={j} alpha={alpha}"
    return _result("root-identities", worst, 1e-12, detail)


def check_semigroup_identities() -> CheckResult:
    """S(0) = I, det S(t) = exp(-alpha lambda t), and the composition
    law S(s+t) = S(s) S(t)."""
    worst = 0.0
    detail = ""
    for alpha in GRID_ALPHAS:
        for j in GRID_MODES:
            mode = make_mode(j, alpha)
            s0 = semigroup_coeffs(mode, 0.0)
            dev = max(abs(s0.s1 - 1.0), abs(s0.s2), abs(s0.s3), abs(s0.s4 - 1.0))
            if dev > worst:
                worst, detail = dev, f"j={j} alpha={alpha} t=0"
            for t in GRID_STEPS:
                st = semigroup_coeffs(mode, t)
                det = st.s1 * st.s4 - st.s2 * st.s3
                dev = abs(det - math.exp(-alpha * mode.lam * t))
                if dev > worst:
                    worst, detail = dev, f"j={j} alpha={alpha} t={t} det"
                half = semigroup_coeffs(mode, 0.5 * t)
                comp = (
                    half.s1 * half.s1 + half.s2 * half.s3,
                    half.s1 * half.s2 + half.s2 * half.s4,
                    half.s3 * half.s1 + half.s4 * half.s3,
                    half.s3 * half.s2 + half.s4 * half.s4,
                )
                dev = max(
                    abs(comp[0] - st.s1),
                    abs(comp[1] - st.s2),
                    abs(comp[2] - st.s3),
                    abs(comp[3] - st.s4),
                )
                if dev > worst:
                    worst, detail = dev, f"j={j} alpha={alpha} t={t} comp"
    return _result("semigroup-identities", worst, 1e-10, detail)


_COV_FIELDS = (
    "var_eta",
    "var_etahat",
    "var_dw",
    "cov_eta_etahat",
    "cov_eta_dw",
    "cov_etahat_dw",
)


def check_covariance_oracle(cov_fn=None, gamma: float = 1.0) -> CheckResult:
    """Closed-form increment covariance against direct quadrature of the
    Ito-isometry integrals, entrywise relative to the var_dw scale."""
    if cov_fn is None:
        cov_fn = increment_covariance
    worst = 0.0
    detail = ""
    for alpha in GRID_ALPHAS:
        for j in GRID_MODES:
            mode = make_mode(j, alpha, gamma=gamma)
            for k in GRID_STEPS:
                closed = cov_fn(mode, k)
                oracle = covariance_quadrature_oracle(mode, k)
                scale = oracle.var_dw if oracle.var_dw > 0.0 else 1.0
                for field in _COV_FIELDS:
                    dev = abs(getattr(closed, field) - getattr(oracle, field)) / scale
                    if dev > worst:
                        worst, detail = dev, f"j={j} alpha={alpha} k={k} {field}"
    return _result("covariance-oracle", worst, 1e-9, detail)


def check_cholesky_factorization() -> CheckResult:
    """L L^T reproduces the covariance matrix across the stress grid."""
    worst = 0.0
    detail = ""
    for alpha in GRID_ALPHAS:
        for j in GRID_MODES:
            mode = make_mode(j, alpha)
            for k in GRID_STEPS:
                cov = increment_covariance(mode, k).as_matrix(3)
                ell = cholesky(cov, 3)
                scale = max(cov[2, 2], 1e-300)
                dev = float(np.max(np.abs(ell @ ell.T - cov))) / scale
                if dev > worst:
                    worst, detail = dev, f"j={j} alpha={alpha} k={k}"
    return _result("cholesky-factorization", worst, 1e-12, detail)


def check_nemytskii_roundtrip() -> CheckResult:
    """analyze(synthesize(c)) recovers c exactly on the default grid."""
    rng = np.random.default_rng(1234)
    worst = 0.0
    detail = ""
    for n in (1, 2, 8, 64):
        coeffs = rng.standard_normal(n)
        n_quad = default_quadrature_points(n)
        values = synthesize(coeffs, n_quad)
        back = analyze(values, n, n_quad)
        denom = float(np.max(np.abs(coeffs)))
        dev = float(np.max(np.abs(back - coeffs))) / denom
        if dev > worst:
            worst, detail = dev, f"N={n}"
        # collocation values must match direct eigenfunction summation
        x = collocation_grid(n_quad)
        direct = np.zeros(n_quad)
        for i in range(n):
            direct += coeffs[i] * math.sqrt(2.0) * np.sin((i + 1) * math.pi * x)
        dev = float(np.max(np.abs(values - direct))) / denom
        if dev > worst:
            worst, detail = dev, f"N={n} grid"
    return _result("nemytskii-roundtrip", worst, 1e-12, detail)


def check_zero_noise_degenerates() -> CheckResult:
    """gamma = 0 collapses every covariance entry to exactly zero."""
    worst = 0.0
    detail = ""
    for alpha in GRID_ALPHAS:
        for j in GRID_MODES:
            mode = make_mode(j, alpha, gamma=0.0)
            for k in GRID_STEPS:
                cov = increment_covariance(mode, k)
                dev = max(abs(getattr(cov, f)) for f in _COV_FIELDS)
                if dev > worst:
                    worst, detail = dev, f"j={j} alpha={alpha} k={k}"
    return _result("zero-noise", worst, 0.0, detail)


def run_validation(cov_fn=None, gamma: float = 1.0) -> list:
    """Run every check; cov_fn substitutes the closed-form covariance
    under test (the corruption hook for exercising the failure path)."""
    return [
        check_root_identities(),
        check_semigroup_identities(),
        check_covariance_oracle(cov_fn=cov_fn, gamma=gamma),
        check_cholesky_factorization(),
        check_nemytskii_roundtrip(),
        check_zero_noise_degenerates(),
    ]


def format_report(results) -> str:
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        line = (
            f"{status}  {res.name:<24} worst={res.worst:.3e}  "
            f"tol={res.tolerance:.1e}"
        )
        if res.detail and not res.passed:
            line += f"  at {res.detail}"
        lines.append(line)
    return "\n".join(lines)

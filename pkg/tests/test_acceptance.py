"""End-to-end acceptance gate.

One test per criterion; each prints a single PASS/FAIL line with the
measured quantities so the run log doubles as the acceptance report.
The Monte-Carlo studies replicate the convergence-figure protocols at
full sample count and take a few minutes; everything else is seconds.
"""

import math
import time

import numpy as np
import scipy.linalg

from sdwave import (
    BENCHMARK_NONLINEARITY,
    NoiseSpec,
    NoiseStream,
    ProblemConfig,
    State,
    StepPlan,
    analyze,
    apply_nemytskii,
    covariance_quadrature_oracle,
    generate_increments,
    increment_covariance,
    increment_factors,
    integrate,
    make_mode,
    make_modes,
    run_study,
    semigroup_table,
    spatial_study,
    synthesize,
    temporal_study,
)
from sdwave.cli import main

COV_FIELDS = (
    "var_eta",
    "var_etahat",
    "var_dw",
    "cov_eta_etahat",
    "cov_eta_dw",
    "cov_etahat_dw",
)

STUDY_CONFIG = ProblemConfig(
    alpha=1.0, n_modes=64, nonlinearity=BENCHMARK_NONLINEARITY
)


def report(capsys, num, name, passed, details):
    with capsys.disabled():
        print(f"\nACCEPTANCE {num} {name}: {'PASS' if passed else 'FAIL'} ({details})")


def test_acceptance_1_semigroup_correctness(capsys):
    t0 = time.time()
    worst_id = worst_comp = worst_det = worst_oracle = 0.0
    s, t = 0.1, 0.15
    for alpha in (0.1, 1.0, 10.0):
        modes = make_modes(alpha, 256, gammas=np.zeros(256))
        at_zero = np.array(semigroup_table(modes, 0.0))
        identity = np.array([1.0, 0.0, 0.0, 1.0])[:, None] * np.ones(256)
        worst_id = max(worst_id, float(np.max(np.abs(at_zero - identity))))

        s1a, s2a, s3a, s4a = semigroup_table(modes, s)
        s1b, s2b, s3b, s4b = semigroup_table(modes, t)
        s1c, s2c, s3c, s4c = semigroup_table(modes, s + t)
        worst_comp = max(
            worst_comp,
            float(np.max(np.abs(s1a * s1b + s2a * s3b - s1c))),
            float(np.max(np.abs(s1a * s2b + s2a * s4b - s2c))),
            float(np.max(np.abs(s3a * s1b + s4a * s3b - s3c))),
            float(np.max(np.abs(s3a * s2b + s4a * s4b - s4c))),
        )

        for tt in (s, s + t):
            s1, s2, s3, s4 = semigroup_table(modes, tt)
            dets = s1 * s4 - s2 * s3
            lams = np.array([m.lam for m in modes])
            worst_det = max(
                worst_det, float(np.max(np.abs(dets - np.exp(-alpha * lams * tt))))
            )
            for i, mode in enumerate(modes):
                gen = np.array([[0.0, -1.0], [mode.lam, mode.alpha_lam]])
                oracle = scipy.linalg.expm(-tt * gen)
                ours = np.array([[s1[i], s2[i]], [s3[i], s4[i]]])
                rel = np.linalg.norm(ours - oracle) / max(
                    np.linalg.norm(oracle), 1e-300
                )
                worst_oracle = max(worst_oracle, float(rel))
    elapsed = time.time() - t0
    passed = max(worst_id, worst_comp, worst_det, worst_oracle) <= 1e-10
    report(
        capsys,
        1,
        "semigroup correctness",
        passed,
        f"identity {worst_id:.2e}, composition {worst_comp:.2e}, "
        f"determinant {worst_det:.2e}, expm oracle {worst_oracle:.2e}, "
        f"{elapsed:.2f}s",
    )
    assert worst_id <= 1e-10
    assert worst_comp <= 1e-10
    assert worst_det <= 1e-10
    assert worst_oracle <= 1e-10


def test_acceptance_2_covariance_oracle_equivalence(capsys):
    t0 = time.time()
    worst = 0.0
    where = ""
    for j in (1, 2, 4, 16, 64, 256):
        for alpha in (0.1, 1.0, 10.0):
            mode = make_mode(j, alpha, gamma=1.0)
            for k in (2.0 ** -2, 2.0 ** -6, 2.0 ** -10):
                closed = increment_covariance(mode, k)
                oracle = covariance_quadrature_oracle(mode, k)
                for field in COV_FIELDS:
                    c, o = getattr(closed, field), getattr(oracle, field)
                    rel = abs(c - o) / abs(o) if o != 0.0 else abs(c)
                    if rel > worst:
                        worst = rel
                        where = f"j={j} alpha={alpha} k={k} {field}"
    elapsed = time.time() - t0
    passed = worst <= 1e-9
    report(
        capsys,
        2,
        "covariance oracle equivalence",
        passed,
        f"54-point grid, worst rel {worst:.2e} at {where}, {elapsed:.2f}s",
    )
    assert passed


def test_acceptance_3_sampler_law(capsys):
    t0 = time.time()
    mode = make_mode(1, 1.0, gamma=1.0)
    k = 0.25
    # one million iid triples: 1000 identical mode slots x 1000 steps
    factors = increment_factors([mode] * 1000, k)
    eta, etahat, dw = generate_increments(factors, NoiseStream(0, 0), 1000)
    draws = np.column_stack([eta.ravel(), etahat.ravel(), dw.ravel()])
    sample = np.cov(draws.T)
    truth = increment_covariance(mode, k).as_matrix(3)
    diag_rel = float(np.max(np.abs(np.diag(sample) - np.diag(truth)) / np.diag(truth)))

    def corr(mat):
        d = np.sqrt(np.diag(mat))
        return mat / np.outer(d, d)

    corr_abs = float(np.max(np.abs(corr(sample) - corr(truth))))
    elapsed = time.time() - t0
    passed = diag_rel <= 1e-2 and corr_abs <= 1e-2
    report(
        capsys,
        3,
        "sampler law",
        passed,
        f"10^6 triples, diag rel {diag_rel:.2e} (tol 1e-2), "
        f"corr abs {corr_abs:.2e} (tol 1e-2), {elapsed:.2f}s",
    )
    assert passed


def test_acceptance_4_linear_exactness(capsys):
    t0 = time.time()
    config = ProblemConfig(alpha=1.0, n_modes=8)
    rng = np.random.default_rng(0)
    init = State(rng.standard_normal(8), rng.standard_normal(8))
    coarse = integrate(config, StepPlan.for_horizon(1.0, 8), 0, 0, initial_state=init)
    fine = integrate(config, StepPlan.for_horizon(1.0, 1024), 0, 0, initial_state=init)
    dev = max(
        float(np.max(np.abs(coarse.u - fine.u))),
        float(np.max(np.abs(coarse.v - fine.v))),
    )
    elapsed = time.time() - t0
    passed = dev <= 1e-10
    report(
        capsys,
        4,
        "linear exactness",
        passed,
        f"M=8 vs M=1024 deviation {dev:.2e} (tol 1e-10), {elapsed:.2f}s",
    )
    assert passed


def test_acceptance_5_temporal_rates_white_noise(capsys):
    t0 = time.time()
    spec = temporal_study(NoiseSpec("white"), samples=100, seed=0)
    result = run_study(spec, STUDY_CONFIG)
    aee_u = result.fits[("aee", "u")].slope
    aee_v = result.fits[("aee", "v")].slope
    lie_u = result.fits[("lie", "u")].slope
    lie_v = result.fits[("lie", "v")].slope
    elapsed = time.time() - t0
    passed = (
        0.8 <= aee_u <= 1.2
        and 0.8 <= aee_v <= 1.2
        and 0.55 <= lie_u <= 0.95
        and 0.1 <= lie_v <= 0.45
        and lie_v < aee_v - 0.3
    )
    report(
        capsys,
        5,
        "temporal rates, white noise",
        passed,
        f"AEE-D {aee_u:.4f} AEE-V {aee_v:.4f} (targets [0.8,1.2]), "
        f"LIE-D {lie_u:.4f} (target [0.55,0.95]), "
        f"LIE-V {lie_v:.4f} (target [0.1,0.45]), 100 samples, {elapsed:.0f}s",
    )
    assert 0.8 <= aee_u <= 1.2
    assert 0.8 <= aee_v <= 1.2
    assert 0.55 <= lie_u <= 0.95
    assert 0.1 <= lie_v <= 0.45
    assert lie_v < aee_v - 0.3


def test_acceptance_6_temporal_rates_trace_class_noise(capsys):
    t0 = time.time()
    noise = NoiseSpec("fractional_power", exponent=0.5005)
    spec = temporal_study(noise, samples=100, seed=0, schemes=("aee",))
    result = run_study(spec, STUDY_CONFIG)
    aee_u = result.fits[("aee", "u")].slope
    aee_v = result.fits[("aee", "v")].slope
    elapsed = time.time() - t0
    passed = 0.8 <= aee_u <= 1.2 and 0.8 <= aee_v <= 1.2
    report(
        capsys,
        6,
        "temporal rates, trace-class noise",
        passed,
        f"AEE-D {aee_u:.4f} AEE-V {aee_v:.4f} (targets [0.8,1.2]), "
        f"100 samples, {elapsed:.0f}s",
    )
    assert passed


def test_acceptance_7_spatial_rates(capsys):
    t0 = time.time()
    cases = {
        "white": (NoiseSpec("white"), -1.5, -0.5),
        "fractional": (NoiseSpec("fractional_power", exponent=0.5005), -2.0, -1.0),
    }
    measured = {}
    ok = True
    for label, (noise, target_u, target_v) in cases.items():
        spec = spatial_study(noise, samples=100, seed=0)
        result = run_study(spec, STUDY_CONFIG)
        slope_u = result.fits[("aee", "u")].slope
        slope_v = result.fits[("aee", "v")].slope
        measured[label] = (slope_u, slope_v)
        ok = ok and abs(slope_u - target_u) <= 0.25 and abs(slope_v - target_v) <= 0.25
    elapsed = time.time() - t0
    details = ", ".join(
        f"{label} AEE-D {u:.4f} AEE-V {v:.4f}" for label, (u, v) in measured.items()
    )
    report(
        capsys,
        7,
        "spatial rates",
        ok,
        f"{details} (targets -1.5/-0.5 and -2.0/-1.0, tol 0.25), "
        f"100 samples, {elapsed:.0f}s",
    )
    wu, wv = measured["white"]
    fu, fv = measured["fractional"]
    assert abs(wu - (-1.5)) <= 0.25
    assert abs(wv - (-0.5)) <= 0.25
    assert abs(fu - (-2.0)) <= 0.25
    assert abs(fv - (-1.0)) <= 0.25


def test_acceptance_8_nemytskii_invariants(capsys):
    t0 = time.time()
    rng = np.random.default_rng(0)
    worst_roundtrip = 0.0
    for n, n_quad in ((8, 17), (8, 33), (32, 65)):
        coeffs = rng.standard_normal(n)
        back = analyze(synthesize(coeffs, n_quad), n)
        worst_roundtrip = max(worst_roundtrip, float(np.max(np.abs(back - coeffs))))

    bound = BENCHMARK_NONLINEARITY.lipschitz_bound + 0.05
    worst_ratio = 0.0
    for _ in range(100):
        u = rng.standard_normal(8)
        w = rng.standard_normal(8)
        df = apply_nemytskii(u, BENCHMARK_NONLINEARITY) - apply_nemytskii(
            w, BENCHMARK_NONLINEARITY
        )
        worst_ratio = max(
            worst_ratio, float(np.linalg.norm(df) / np.linalg.norm(u - w))
        )
    elapsed = time.time() - t0
    passed = worst_roundtrip <= 1e-12 and worst_ratio <= bound
    report(
        capsys,
        8,
        "nemytskii invariants",
        passed,
        f"roundtrip {worst_roundtrip:.2e} (tol 1e-12), "
        f"lipschitz ratio {worst_ratio:.4f} (bound {bound}), {elapsed:.2f}s",
    )
    assert passed


def test_acceptance_9_study_determinism(capsys, tmp_path):
    t0 = time.time()
    base = [
        "study",
        "--axis",
        "temporal",
        "--samples",
        "4",
        "--modes",
        "16",
        "--steps",
        "512",
        "--seed",
        "3",
    ]
    outputs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "2")):
        out = str(tmp_path / name)
        code = main(base + ["--out", out, "--threads", threads])
        assert code == 0
        with open(out + "/study.csv", "rb") as fh:
            outputs.append(fh.read())
    elapsed = time.time() - t0
    passed = outputs[0] == outputs[1] == outputs[2]
    report(
        capsys,
        9,
        "study determinism",
        passed,
        f"3 runs (repeat + --threads 2) byte-identical CSV: "
        f"{passed}, {elapsed:.1f}s",
    )
    assert passed

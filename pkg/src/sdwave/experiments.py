"""Monte-Carlo strong-convergence studies and result serialization.

A study integrates, for each sample path, one fine reference run and a
family of coarser runs that share the reference's Brownian path, then
aggregates mean-square errors at the final time T:

    temporal axis: levels are step sizes k; every run uses the full mode
        count and the coarse noise is propagated from the fine grid.
    spatial axis: levels are Galerkin dimensions N; every run marches on
        the same fine time grid and the coarse runs consume the
        identical per-mode noise restricted to their first N modes.

Errors are reported per field (displacement "u", velocity "v") as
sqrt(mean of squared L2 norms) with Monte-Carlo standard errors, and
log-log slopes are fitted per (scheme, field).
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateFit, DimensionMismatch
from .integrators import (
    State,
    StepPlan,
    aee_tables,
    lie_tables,
    propagate_noise_fine_to_coarse,
    propagation_coeffs,
    run_march,
)
from .noise import NoiseSpec, NoiseStream, NoiseTriple, generate_increments, increment_factors
from .nonlinearity import make_nemytskii
from .problem import ProblemConfig, build_modes

TEMPORAL_LEVELS = tuple(2.0 ** -i for i in range(3, 9))
TEMPORAL_K_REF = 2.0 ** -12
SPATIAL_LEVELS = (2, 4, 8, 16, 32)
SPATIAL_N_REF = 2 ** 8
SPATIAL_K = 2.0 ** -14


@dataclass(frozen=True)
class StudySpec:
    """Protocol of one convergence study.

    For the temporal axis, levels are step sizes and k_ref is the
    reference step; for the spatial axis, levels are mode counts, n_ref
    the reference dimension and k_ref the shared step size of all runs.
    """

    axis: str
    levels: tuple
    samples: int
    seed: int
    noise_case: NoiseSpec | None
    k_ref: float
    n_ref: int | None = None
    schemes: tuple[str, ...] = ("aee",)

    def __post_init__(self):
        if self.axis not in ("temporal", "spatial"):
            raise ConfigError(f"axis must be temporal or spatial, got {self.axis!r}")
        if self.samples < 2:
            raise ConfigError("samples must be >= 2")
        if len(self.levels) < 1:
            raise ConfigError("need at least one level")
        diffs = np.diff(np.asarray(self.levels, dtype=float))
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("levels must be strictly ordered")
        if not self.schemes or any(s not in ("aee", "lie") for s in self.schemes):
            raise ConfigError(f"schemes must be drawn from aee/lie, got {self.schemes}")
        if self.axis == "temporal":
            if min(self.levels) <= self.k_ref:
                raise ConfigError("reference step must be finer than every level")
        else:
            if self.n_ref is None:
                raise ConfigError("spatial axis requires n_ref")
            if max(self.levels) >= self.n_ref:
                raise ConfigError("n_ref must exceed every spatial level")


def temporal_study(
    noise: NoiseSpec | None,
    samples: int = 100,
    seed: int = 0,
    schemes: tuple[str, ...] = ("aee", "lie"),
    levels: tuple = TEMPORAL_LEVELS,
    k_ref: float = TEMPORAL_K_REF,
) -> StudySpec:
    """The temporal-rate protocol: k = 2^-3..2^-8 against k_ref = 2^-12."""
    return StudySpec(
        axis="temporal", levels=tuple(levels), samples=samples, seed=seed,
        noise_case=noise, k_ref=k_ref, schemes=tuple(schemes),
    )


def spatial_study(
    noise: NoiseSpec | None,
    samples: int = 100,
    seed: int = 0,
    schemes: tuple[str, ...] = ("aee",),
    levels: tuple = SPATIAL_LEVELS,
    n_ref: int = SPATIAL_N_REF,
    k_ref: float = SPATIAL_K,
) -> StudySpec:
    """The spatial-rate protocol: N = 2..32 against N_ref = 256 at k = 2^-14."""
    return StudySpec(
        axis="spatial", levels=tuple(int(n) for n in levels), samples=samples,
        seed=seed, noise_case=noise, k_ref=k_ref, n_ref=n_ref,
        schemes=tuple(schemes),
    )


@dataclass(frozen=True)
class ErrorRecord:
    scheme: str
    level: float
    err_u: float
    stderr_u: float
    err_v: float
    stderr_v: float


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class StudyResult:
    spec: StudySpec
    records: list
    fits: dict  # (scheme, field) -> SlopeFit


def ms_error(ref: State, approx: State) -> tuple[float, float]:
    """Squared L2 errors (displacement, velocity) of one sample.

    The approximation is zero-padded to the reference dimension, so by
    Parseval the squared L2 distance is the squared Euclidean distance
    of the coefficient vectors.
    """
    n_ref = ref.u.shape[0]
    n = approx.u.shape[0]
    if n > n_ref:
        raise DimensionMismatch(f"approx dimension {n} exceeds reference {n_ref}")
    du = ref.u.copy()
    du[:n] -= approx.u
    dv = ref.v.copy()
    dv[:n] -= approx.v
    return float(du @ du), float(dv @ dv)


def aggregate_errors(squared: np.ndarray) -> tuple[float, float]:
    """Root-mean of per-sample squared errors and its standard error.

    The standard error of the root is the delta-method transform of the
    standard error of the mean square: se(sqrt(m)) = se(m) / (2 sqrt(m)).
    """
    squared = np.asarray(squared, dtype=float)
    mean_sq = float(np.mean(squared))
    err = math.sqrt(mean_sq)
    if squared.size < 2 or err == 0.0:
        return err, 0.0
    se_mean = float(np.std(squared, ddof=1)) / math.sqrt(squared.size)
    return err, se_mean / (2.0 * err)


def fit_slope(points) -> SlopeFit:
    """OLS fit of log(error) against log(level)."""
    pts = [(float(lv), float(e)) for lv, e in points]
    if len(pts) < 3:
        raise DegenerateFit(f"need >= 3 points, got {len(pts)}")
    if any(e <= 0.0 for _, e in pts):
        raise DegenerateFit("all errors must be positive for a log-log fit")
    x = np.log([lv for lv, _ in pts])
    y = np.log([e for _, e in pts])
    if np.ptp(x) == 0.0:
        raise DegenerateFit("levels are all equal")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = y - y.mean()
    ss_tot = float(total @ total)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    return SlopeFit(float(slope), float(intercept), float(r2))


def predicted_slopes(axis: str, scheme: str, noise: NoiseSpec | None):
    """Analytically expected log-log slopes (u, v) for plot guide lines.

    gamma is the regularity parameter of the noise case.  The
    exponential scheme is first order in time for any admissible gamma
    (its noise part is sampled exactly); the implicit baseline is
    limited by the temporal Hoelder regularity of the solution.  In
    space the error follows the spectral truncation lambda_N^(-beta/2)
    which reads as N^(-beta) on a log N axis.
    """
    if noise is None:
        return None
    g = noise.regularity_gamma
    if axis == "temporal":
        if scheme == "aee":
            return (1.0, 1.0)
        return (min(1.0, (1.0 + g) / 2.0), min(g, 1.0) / 2.0)
    return (-(1.0 + min(g, 1.0)), -min(g, 1.0))


def run_study(
    spec: StudySpec,
    config: ProblemConfig,
    threads: int = 1,
    backend: str | None = None,
) -> StudyResult:
    """Execute the Monte-Carlo study; deterministic for fixed spec.

    config supplies alpha, t_end and the nonlinearity; the noise case
    and all discretization parameters come from spec (config.noise is
    superseded by spec.noise_case).  Samples may run on several threads;
    results are aggregated in sample-index order, so the output is
    independent of scheduling.
    """
    config = dataclasses.replace(config, noise=spec.noise_case)
    if spec.axis == "temporal":
        worker, keys = _temporal_worker(spec, config, backend)
    else:
        worker, keys = _spatial_worker(spec, config, backend)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_sample = list(pool.map(worker, range(spec.samples)))
    else:
        per_sample = [worker(s) for s in range(spec.samples)]

    records = []
    fits = {}
    errs = {}
    for scheme in spec.schemes:
        for level in spec.levels:
            sq = np.array([per_sample[s][(scheme, level)] for s in range(spec.samples)])
            err_u, stderr_u = aggregate_errors(sq[:, 0])
            err_v, stderr_v = aggregate_errors(sq[:, 1])
            records.append(
                ErrorRecord(scheme, float(level), err_u, stderr_u, err_v, stderr_v)
            )
            errs.setdefault((scheme, "u"), []).append((level, err_u))
            errs.setdefault((scheme, "v"), []).append((level, err_v))
    for key, pts in errs.items():
        try:
            fits[key] = fit_slope(pts)
        except DegenerateFit:
            pass  # e.g. exact integrator on a linear problem: errors ~ 0
    return StudyResult(spec=spec, records=records, fits=fits)


def _temporal_worker(spec: StudySpec, config: ProblemConfig, backend):
    n = config.n_modes
    t_end = config.t_end
    modes = build_modes(config)
    m_ref = int(round(t_end / spec.k_ref))
    if abs(m_ref * spec.k_ref - t_end) > 1e-9 * t_end:
        raise ConfigError("k_ref does not divide t_end")
    need_dw = "lie" in spec.schemes
    factors = increment_factors(modes, spec.k_ref)
    ref_plan = StepPlan(spec.k_ref, m_ref, "aee")
    ref_tables = aee_tables(modes, spec.k_ref)

    level_data = []
    for k in spec.levels:
        ratio = int(round(k / spec.k_ref))
        if abs(ratio * spec.k_ref - k) > 1e-9 * k:
            raise ConfigError(f"level k={k} is not an integer multiple of k_ref")
        steps = m_ref // ratio
        if steps * ratio != m_ref:
            raise ConfigError(f"level k={k} does not divide the reference grid")
        tables = {
            "aee": aee_tables(modes, k),
            "lie": lie_tables(modes, k),
        }
        level_data.append(
            (k, ratio, propagation_coeffs(modes, spec.k_ref, ratio), steps, tables)
        )

    def worker(sample: int) -> dict:
        f_fn = make_nemytskii(config.nonlinearity, n)
        stream = NoiseStream(spec.seed, sample)
        eta_f, etahat_f, dw_f = generate_increments(
            factors, stream, m_ref, with_dw=need_dw
        )
        fine = NoiseTriple(eta_f, etahat_f, dw_f)
        ref = run_march(
            ref_plan, State.zero(n), modes, fine, f_fn,
            backend=backend, tables=ref_tables,
        )
        out = {}
        for k, ratio, coeffs, steps, tables in level_data:
            coarse = propagate_noise_fine_to_coarse(fine, ratio, coeffs)
            for scheme in spec.schemes:
                plan = StepPlan(k, steps, scheme)
                state = run_march(
                    plan, State.zero(n), modes, coarse, f_fn,
                    backend=backend, tables=tables[scheme],
                )
                out[(scheme, k)] = ms_error(ref, state)
        return out

    return worker, [(s, k) for s in spec.schemes for k in spec.levels]


def _spatial_worker(spec: StudySpec, config: ProblemConfig, backend):
    n_ref = spec.n_ref
    t_end = config.t_end
    modes = build_modes(config, n_modes=n_ref)
    steps = int(round(t_end / spec.k_ref))
    if abs(steps * spec.k_ref - t_end) > 1e-9 * t_end:
        raise ConfigError("k_ref does not divide t_end")
    need_dw = "lie" in spec.schemes
    factors = increment_factors(modes, spec.k_ref)
    ref_tables = {
        "aee": aee_tables(modes, spec.k_ref),
        "lie": lie_tables(modes, spec.k_ref),
    }

    def sliced_aee(t, n):
        return dataclasses.replace(
            t, s1=t.s1[:n], s2=t.s2[:n], s3=t.s3[:n], s4=t.s4[:n],
            ks2=t.ks2[:n], ks4=t.ks4[:n],
        )

    def sliced_lie(t, n):
        return dataclasses.replace(
            t, c11=t.c11[:n], c12=t.c12[:n], c21=t.c21[:n], c22=t.c22[:n]
        )

    level_tables = {
        n: {
            "aee": sliced_aee(ref_tables["aee"], n),
            "lie": sliced_lie(ref_tables["lie"], n),
        }
        for n in spec.levels
    }

    def worker(sample: int) -> dict:
        f_fns = {
            n: make_nemytskii(config.nonlinearity, n)
            for n in (n_ref, *spec.levels)
        }
        stream = NoiseStream(spec.seed, sample)
        eta, etahat, dw = generate_increments(
            factors, stream, steps, with_dw=need_dw
        )
        ref_plan = StepPlan(spec.k_ref, steps, "aee")
        ref = run_march(
            ref_plan,
            State.zero(n_ref),
            modes,
            NoiseTriple(eta, etahat, dw),
            f_fns[n_ref],
            backend=backend,
            tables=ref_tables["aee"],
        )
        out = {}
        for n in spec.levels:
            # restriction to the first n modes of the same noise path
            noise_n = NoiseTriple(
                np.ascontiguousarray(eta[:, :n]),
                np.ascontiguousarray(etahat[:, :n]),
                np.ascontiguousarray(dw[:, :n]) if need_dw else None,
            )
            for scheme in spec.schemes:
                plan = StepPlan(spec.k_ref, steps, scheme)
                state = run_march(
                    plan, State.zero(n), modes[:n], noise_n, f_fns[n],
                    backend=backend, tables=level_tables[n][scheme],
                )
                out[(scheme, n)] = ms_error(ref, state)
        return out

    return worker, [(s, n) for s in spec.schemes for n in spec.levels]


# ---------------------------------------------------------------------------
# serialization

CSV_HEADER = "scheme,axis,level,err_u,stderr_u,err_v,stderr_v"

_SERIES_COLORS = {
    ("aee", "u"): "#1f77b4",
    ("aee", "v"): "#ff7f0e",
    ("lie", "u"): "#2ca02c",
    ("lie", "v"): "#d62728",
}


def _fmt_level(axis: str, level: float) -> str:
    if axis == "spatial":
        return str(int(level))
    return repr(float(level))


def emit_results(records, fits, out_dir, axis: str) -> tuple[str, str]:
    """Write study.csv and study.svg into out_dir; contents are
    byte-deterministic functions of the inputs."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "study.csv")
    svg_path = os.path.join(out_dir, "study.svg")
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(
            ",".join(
                [
                    rec.scheme,
                    axis,
                    _fmt_level(axis, rec.level),
                    repr(rec.err_u),
                    repr(rec.stderr_u),
                    repr(rec.err_v),
                    repr(rec.stderr_v),
                ]
            )
        )
    with open(csv_path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(svg_path, "w", newline="") as fh:
        fh.write(render_svg(records, fits, axis))
    return csv_path, svg_path


def _log_ticks(lo: float, hi: float):
    first = math.floor(math.log10(lo))
    last = math.ceil(math.log10(hi))
    return [10.0 ** p for p in range(first, last + 1)]


def render_svg(records, fits, axis: str) -> str:
    """Log-log error plot with per-(scheme, field) polylines and dashed
    reference-order guide lines derived from the fitted slopes."""
    width, height = 760, 540
    left, right, top, bottom = 80, 200, 40, 70
    plot_w = width - left - right
    plot_h = height - top - bottom

    series = []
    for scheme in dict.fromkeys(r.scheme for r in records):
        for field_name in ("u", "v"):
            recs = [r for r in records if r.scheme == scheme]
            xs = [r.level for r in recs]
            ys = [getattr(r, f"err_{field_name}") for r in recs]
            if not xs or any(y <= 0 for y in ys):
                continue
            label = f"{scheme.upper()}-{'D' if field_name == 'u' else 'V'}"
            fit = fits.get((scheme, field_name))
            series.append((label, xs, ys, _SERIES_COLORS[(scheme, field_name)], fit))

    if not series:
        body = ['<text x="300" y="270">no positive error data</text>']
        return _svg_document(width, height, body)

    all_x = [x for _, xs, _, _, _ in series for x in xs]
    all_y = [y for _, _, ys, _, _ in series for y in ys]
    lx0, lx1 = math.log10(min(all_x)), math.log10(max(all_x))
    ly0, ly1 = math.log10(min(all_y)), math.log10(max(all_y))
    if lx1 == lx0:
        lx1 = lx0 + 1.0
    pad = 0.05 * (ly1 - ly0 if ly1 > ly0 else 1.0)
    ly0 -= pad
    ly1 += pad

    def px(x):
        return left + (math.log10(x) - lx0) / (lx1 - lx0) * plot_w

    def py(y):
        return top + (ly1 - math.log10(y)) / (ly1 - ly0) * plot_h

    body = []
    body.append(
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#444444"/>'
    )
    for tx in _log_ticks(min(all_x), max(all_x)):
        if math.log10(tx) < lx0 - 1e-9 or math.log10(tx) > lx1 + 1e-9:
            continue
        x = px(tx)
        body.append(
            f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{top + plot_h}" '
            'stroke="#dddddd"/>'
        )
        body.append(
            f'<text x="{x:.2f}" y="{top + plot_h + 18}" text-anchor="middle" '
            f'font-size="11">{tx:g}</text>'
        )
    for ty in _log_ticks(10.0 ** ly0, 10.0 ** ly1):
        lt = math.log10(ty)
        if lt < ly0 - 1e-9 or lt > ly1 + 1e-9:
            continue
        y = py(ty)
        body.append(
            f'<line x1="{left}" y1="{y:.2f}" x2="{left + plot_w}" y2="{y:.2f}" '
            'stroke="#dddddd"/>'
        )
        body.append(
            f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-size="11">{ty:.0e}</text>'
        )

    # dashed guides, one per distinct quarter-rounded fitted slope
    seen_orders = []
    for label, xs, ys, color, fit in series:
        if fit is None:
            continue
        q = round(fit.slope * 4.0) / 4.0
        if q in seen_orders or q == 0.0:
            continue
        seen_orders.append(q)
        x0, x1 = min(xs), max(xs)
        y_anchor = ys[-1] * 1.6
        x_anchor = xs[-1]
        y0 = y_anchor * (x0 / x_anchor) ** q
        y1 = y_anchor * (x1 / x_anchor) ** q
        body.append(
            f'<line x1="{px(x0):.2f}" y1="{py(y0):.2f}" x2="{px(x1):.2f}" '
            f'y2="{py(y1):.2f}" stroke="#888888" stroke-dasharray="6,4"/>'
        )
        body.append(
            f'<text x="{px(x1) + 4:.2f}" y="{py(y1):.2f}" font-size="11" '
            f'fill="#555555">slope {q:g}</text>'
        )

    for idx, (label, xs, ys, color, fit) in enumerate(series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        body.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            'stroke-width="1.8"/>'
        )
        for x, y in zip(xs, ys):
            body.append(
                f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>'
            )
        ly = top + 16 + 18 * idx
        lx = left + plot_w + 14
        body.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        text = label if fit is None else f"{label} (slope {fit.slope:.3f})"
        body.append(f'<text x="{lx + 28}" y="{ly}" font-size="12">{text}</text>')

    xlabel = "step size k" if axis == "temporal" else "modes N"
    body.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 28}" '
        f'text-anchor="middle" font-size="13">{xlabel}</text>'
    )
    body.append(
        f'<text x="22" y="{top + plot_h / 2:.2f}" text-anchor="middle" '
        f'font-size="13" transform="rotate(-90 22 {top + plot_h / 2:.2f})">'
        "mean-square error at T</text>"
    )
    return _svg_document(width, height, body)


def _svg_document(width: int, height: int, body) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        '<rect width="100%" height="100%" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"

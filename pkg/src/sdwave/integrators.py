"""Time marches: exponential scheme, linear-implicit Euler, noise coupling.

Both schemes advance the spectral Galerkin system mode by mode.  The
exponential scheme (AEE) applies the exact per-mode semigroup to the
state and the frozen nonlinearity and adds the exactly sampled
stochastic-convolution increments:

    u' = s1*u + s2*v + k*s2*F(u) + eta
    v' = s3*u + s4*v + k*s4*F(u) + etahat

It is exact on the linear homogeneous problem.  The baseline (LIE)
treats the linear part implicitly and is driven by plain Wiener
increments:

    (I + k*A_j) X' = X + k*(0, F(u))' + (0, dW)'

Fine-to-coarse propagation lets a coarse run consume the same Brownian
path as a fine reference run: the coarse stochastic-convolution pair is
the semigroup-weighted sum of the fine pairs and the coarse dW is the
plain sum, which is the semigroup composition identity applied to the
convolution integral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends import get_backend
from .errors import ConfigError, RatioMismatch
from .noise import NoiseTriple, generate_increments, increment_factors
from .nonlinearity import make_nemytskii
from .problem import ProblemConfig, build_modes
from .spectral import ModeData, semigroup_table

_CHUNK_STEPS = 4096


@dataclass
class State:
    """Spectral coefficients of displacement and velocity."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.ascontiguousarray(self.u, dtype=float)
        self.v = np.ascontiguousarray(self.v, dtype=float)
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise ValueError("u and v must be 1-d arrays of equal length")

    @classmethod
    def zero(cls, n_modes: int) -> "State":
        return cls(np.zeros(n_modes), np.zeros(n_modes))

    def copy(self) -> "State":
        return State(self.u.copy(), self.v.copy())


@dataclass(frozen=True)
class StepPlan:
    """Uniform time grid with k = T/steps and the scheme marching on it."""

    k: float
    steps: int
    scheme: str = "aee"

    def __post_init__(self):
        if self.k <= 0 or self.steps < 1:
            raise ConfigError("StepPlan needs k > 0 and steps >= 1")
        if self.scheme not in ("aee", "lie"):
            raise ConfigError(f"scheme must be 'aee' or 'lie', got {self.scheme!r}")

    @classmethod
    def for_horizon(cls, t_end: float, steps: int, scheme: str = "aee") -> "StepPlan":
        return cls(k=t_end / steps, steps=steps, scheme=scheme)

    def matches_horizon(self, t_end: float) -> bool:
        return abs(self.k * self.steps - t_end) <= 1e-12 * abs(t_end)


@dataclass(frozen=True)
class AeeTables:
    """Per-mode loop invariants of the exponential march at step size k."""

    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    s4: np.ndarray
    ks2: np.ndarray
    ks4: np.ndarray


def aee_tables(modes: list[ModeData], k: float) -> AeeTables:
    s1, s2, s3, s4 = semigroup_table(modes, k)
    return AeeTables(s1, s2, s3, s4, k * s2, k * s4)


@dataclass(frozen=True)
class LieTables:
    """Entries of (I + k*A_j)^(-1) per mode, plus k itself."""

    c11: np.ndarray
    c12: np.ndarray
    c21: np.ndarray
    c22: np.ndarray
    k: float


def lie_tables(modes: list[ModeData], k: float) -> LieTables:
    lam = np.array([m.lam for m in modes])
    alpha_lam = np.array([m.alpha_lam for m in modes])
    det = 1.0 + k * alpha_lam + k * k * lam
    return LieTables(
        c11=(1.0 + k * alpha_lam) / det,
        c12=np.full_like(lam, k) / det,
        c21=-k * lam / det,
        c22=np.ones_like(lam) / det,
        k=k,
    )


def aee_step(
    state: State,
    modes: list[ModeData],
    k: float,
    f_coeffs: np.ndarray | None = None,
    noise: NoiseTriple | None = None,
    tables: AeeTables | None = None,
) -> State:
    """One exponential-scheme step; f_coeffs must be F evaluated at state.u."""
    t = tables if tables is not None else aee_tables(modes, k)
    f = f_coeffs if f_coeffs is not None else np.zeros_like(state.u)
    eta = noise.eta if noise is not None else np.zeros_like(state.u)
    etahat = noise.etahat if noise is not None else np.zeros_like(state.u)
    return State(
        ((t.s1 * state.u + t.s2 * state.v) + t.ks2 * f) + eta,
        ((t.s3 * state.u + t.s4 * state.v) + t.ks4 * f) + etahat,
    )


def lie_step(
    state: State,
    modes: list[ModeData],
    k: float,
    f_coeffs: np.ndarray | None = None,
    dw: np.ndarray | None = None,
    tables: LieTables | None = None,
) -> State:
    """One linear-implicit-Euler step driven by the plain increments dw."""
    t = tables if tables is not None else lie_tables(modes, k)
    f = f_coeffs if f_coeffs is not None else np.zeros_like(state.u)
    d = dw if dw is not None else np.zeros_like(state.u)
    rv = (state.v + k * f) + d
    return State(t.c11 * state.u + t.c12 * rv, t.c21 * state.u + t.c22 * rv)


def propagation_coeffs(modes: list[ModeData], k_fine: float, ratio: int) -> np.ndarray:
    """Semigroup tables S((ratio-1-l)*k_fine) indexed by substep l.

    Shape (4, ratio, N): the weight applied to the fine increments of
    substep l when assembling one coarse increment.
    """
    out = np.empty((4, ratio, len(modes)))
    for sub in range(ratio):
        out[:, sub, :] = semigroup_table(modes, (ratio - 1 - sub) * k_fine)
    return out


def propagate_noise_fine_to_coarse(
    fine: NoiseTriple, ratio: int, coeffs: np.ndarray
) -> NoiseTriple:
    """Combine r fine-step triples into each coarse-step triple.

    fine holds arrays of shape (M_fine, N); coeffs comes from
    ``propagation_coeffs``.  The coarse stochastic-convolution pair is
    sum_l S((r-1-l)k_f) (eta_l, etahat_l)'; the coarse dW is the plain
    sum.  fine.dw may be None when only the AEE increments are needed.
    """
    if ratio < 1:
        raise RatioMismatch(f"ratio must be >= 1, got {ratio}")
    m_fine, n = fine.eta.shape
    if m_fine % ratio:
        raise RatioMismatch(f"{m_fine} fine steps not divisible by ratio {ratio}")
    m_coarse = m_fine // ratio
    er = fine.eta.reshape(m_coarse, ratio, n)
    hr = fine.etahat.reshape(m_coarse, ratio, n)
    s1c, s2c, s3c, s4c = coeffs
    eta_c = np.einsum("lj,mlj->mj", s1c, er) + np.einsum("lj,mlj->mj", s2c, hr)
    etahat_c = np.einsum("lj,mlj->mj", s3c, er) + np.einsum("lj,mlj->mj", s4c, hr)
    dw_c = None
    if fine.dw is not None:
        dw_c = fine.dw.reshape(m_coarse, ratio, n).sum(axis=1)
    return NoiseTriple(eta_c, etahat_c, dw_c)


def run_march(
    plan: StepPlan,
    state: State,
    modes: list[ModeData],
    noise: NoiseTriple,
    f_fn,
    backend: str | None = None,
    tables=None,
) -> State:
    """Advance state in place through all steps of one scheme.

    noise holds (steps, N) arrays; for 'aee' the eta/etahat pair is
    consumed, for 'lie' only dw.
    """
    be = get_backend(backend)
    if plan.scheme == "aee":
        t = tables if tables is not None else aee_tables(modes, plan.k)
        be.aee_march(
            state.u, state.v, t.s1, t.s2, t.s3, t.s4, t.ks2, t.ks4,
            noise.eta, noise.etahat, f_fn,
        )
    else:
        t = tables if tables is not None else lie_tables(modes, plan.k)
        be.lie_march(
            state.u, state.v, t.c11, t.c12, t.c21, t.c22, t.k, noise.dw, f_fn,
        )
    return state


def _zeros_noise(steps: int, n: int) -> NoiseTriple:
    z = np.zeros((steps, n))
    return NoiseTriple(z, z, z)


def integrate(
    config: ProblemConfig,
    plan: StepPlan,
    sample_index: int,
    seed: int,
    coupled_fine_plan: StepPlan | None = None,
    *,
    initial_state: State | None = None,
    backend: str | None = None,
    snapshot_every: int | None = None,
    snapshot_fn=None,
) -> State:
    """March one sample path from t=0 to t=T and return the final state.

    Noise is generated on plan's grid, or on coupled_fine_plan's grid
    and propagated to plan's grid so that runs sharing (seed,
    sample_index) see the same Brownian path regardless of their step
    size.  Initial data defaults to zero.  If snapshot_every is set,
    snapshot_fn(step_index, state_copy) is invoked at that cadence.
    """
    from .noise import NoiseStream  # local import keeps module load cheap

    if not plan.matches_horizon(config.t_end):
        raise ConfigError(
            f"plan covers {plan.k * plan.steps}, config.t_end is {config.t_end}"
        )
    n = config.n_modes
    modes = build_modes(config)
    f_fn = make_nemytskii(config.nonlinearity, n)
    state = State.zero(n) if initial_state is None else initial_state.copy()
    if state.u.shape[0] != n:
        raise ConfigError("initial state dimension differs from n_modes")
    need_dw = plan.scheme == "lie"
    stream = NoiseStream(seed, sample_index)

    if config.noise is None:
        noise_for = lambda start, stop: _zeros_noise(stop - start, n)  # noqa: E731
    elif coupled_fine_plan is not None:
        ratio = int(round(plan.k / coupled_fine_plan.k))
        if (
            abs(ratio * coupled_fine_plan.k - plan.k) > 1e-12 * plan.k
            or coupled_fine_plan.steps != ratio * plan.steps
        ):
            raise RatioMismatch(
                "coupled_fine_plan must subdivide the coarse plan exactly"
            )
        factors = increment_factors(modes, coupled_fine_plan.k)
        eta_f, etahat_f, dw_f = generate_increments(
            factors, stream, coupled_fine_plan.steps, with_dw=need_dw
        )
        coarse = propagate_noise_fine_to_coarse(
            NoiseTriple(eta_f, etahat_f, dw_f),
            ratio,
            propagation_coeffs(modes, coupled_fine_plan.k, ratio),
        )
        noise_for = lambda start, stop: _slice_noise(coarse, start, stop)  # noqa: E731
    else:
        factors = increment_factors(modes, plan.k)

        def noise_for(start, stop):
            eta, etahat, dw = generate_increments(
                factors, stream, stop - start, first_step=start, with_dw=need_dw
            )
            return NoiseTriple(eta, etahat, dw)

    if plan.scheme == "aee":
        tables = aee_tables(modes, plan.k)
    else:
        tables = lie_tables(modes, plan.k)

    for start, stop in _segments(plan.steps, snapshot_every):
        seg_plan = StepPlan(plan.k, stop - start, plan.scheme)
        run_march(
            seg_plan, state, modes, noise_for(start, stop), f_fn,
            backend=backend, tables=tables,
        )
        if snapshot_every and snapshot_fn and stop % snapshot_every == 0:
            snapshot_fn(stop, state.copy())
    return state


def _slice_noise(noise: NoiseTriple, start: int, stop: int) -> NoiseTriple:
    dw = noise.dw[start:stop] if noise.dw is not None else None
    return NoiseTriple(noise.eta[start:stop], noise.etahat[start:stop], dw)


def _segments(total: int, snapshot_every: int | None):
    """Split [0, total) at chunk boundaries and snapshot points."""
    cuts = set(range(0, total, _CHUNK_STEPS))
    if snapshot_every:
        if snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1")
        cuts.update(range(0, total, snapshot_every))
    edges = sorted(cuts | {total})
    return list(zip(edges[:-1], edges[1:]))

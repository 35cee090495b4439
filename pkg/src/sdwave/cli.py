"""Command-line entry point: simulate / study / validate.

Configuration is a flat key-value JSON document (numbers and strings
only).  Every key has a flag twin and an environment twin; precedence
is built-in defaults < config file < SDWAVE_* environment variables <
flags.  The fully resolved configuration is echoed as config.json next
to the outputs, and replaying that file reproduces the run byte for
byte.

Exit codes: 0 success, 1 validation or runtime failure, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ConfigError, SdwaveError
from .experiments import (
    SPATIAL_LEVELS,
    TEMPORAL_LEVELS,
    emit_results,
    run_study,
    spatial_study,
    temporal_study,
)
from .integrators import State, StepPlan, integrate
from .noise import NoiseSpec
from .nonlinearity import BENCHMARK_NONLINEARITY
from .problem import ProblemConfig
from .validation import format_report, run_validation

ENV_PREFIX = "SDWAVE_"

# key -> (python type, default; None means resolved per subcommand/axis)
_KEYS = {
    "axis": (str, "temporal"),
    "noise": (str, "white"),
    "exponent": (float, 0.5005),
    "alpha": (float, 1.0),
    "modes": (int, None),
    "steps": (int, None),
    "samples": (int, 100),
    "seed": (int, 0),
    "scheme": (str, None),
    "out": (str, "sdwave-out"),
    "threads": (int, 1),
    "t_end": (float, 1.0),
    "initial": (str, "zero"),
    "nonlinearity": (str, "benchmark"),
    "grid_points": (int, 0),
}

_CHOICES = {
    "axis": ("temporal", "spatial"),
    "noise": ("white", "fractional", "none"),
    "scheme": ("aee", "lie", "both"),
    "initial": ("zero", "e1"),
    "nonlinearity": ("benchmark", "none"),
}


@dataclass
class RunConfig:
    axis: str
    noise: str
    exponent: float
    alpha: float
    modes: int
    steps: int
    samples: int
    seed: int
    scheme: str
    out: str
    threads: int
    t_end: float
    initial: str
    nonlinearity: str
    grid_points: int


def _coerce(key: str, value, typ):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: booleans are not accepted")
    try:
        coerced = typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r} as {typ.__name__}")
    if key in _CHOICES and coerced not in _CHOICES[key]:
        raise ConfigError(
            f"{key}: must be one of {'/'.join(_CHOICES[key])}, got {coerced!r}"
        )
    return coerced


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config: document must be a flat JSON object")
    out = {}
    for key, value in raw.items():
        if key not in _KEYS:
            raise ConfigError(f"config: unknown key {key!r}")
        if not isinstance(value, (int, float, str)) or isinstance(value, bool):
            raise ConfigError(f"config: {key} must be a number or string")
        out[key] = _coerce(key, value, _KEYS[key][0])
    return out


def _env_overrides(environ) -> dict:
    out = {}
    for key, (typ, _) in _KEYS.items():
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            out[key] = _coerce(key, raw, typ)
    return out


def resolve_config(command: str, args: argparse.Namespace, environ=None) -> RunConfig:
    """Merge defaults, config file, environment and flags, then fill the
    per-subcommand defaults for keys without a global one."""
    if environ is None:
        environ = os.environ
    merged = {key: default for key, (_, default) in _KEYS.items()}
    if args.config:
        merged.update(_load_config_file(args.config))
    merged.update(_env_overrides(environ))
    for key, (typ, _) in _KEYS.items():
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = _coerce(key, value, typ)

    spatial = merged["axis"] == "spatial"
    if merged["modes"] is None:
        merged["modes"] = 256 if (command == "study" and spatial) else 64
    if merged["steps"] is None:
        if command == "study":
            merged["steps"] = 16384 if spatial else 4096
        else:
            merged["steps"] = 1024
    if merged["scheme"] is None:
        if command == "study":
            merged["scheme"] = "aee" if spatial else "both"
        else:
            merged["scheme"] = "aee"

    cfg = RunConfig(**merged)
    if cfg.modes < 1:
        raise ConfigError("modes: must be >= 1")
    if cfg.steps < 1:
        raise ConfigError("steps: must be >= 1")
    if cfg.threads < 1:
        raise ConfigError("threads: must be >= 1")
    if cfg.grid_points < 0:
        raise ConfigError("grid_points: must be >= 0")
    if cfg.t_end <= 0.0:
        raise ConfigError("t_end: must be positive")
    return cfg


def _noise_spec(cfg: RunConfig):
    if cfg.noise == "none":
        return None
    if cfg.noise == "white":
        return NoiseSpec("white")
    return NoiseSpec("fractional_power", exponent=cfg.exponent)


def _problem(cfg: RunConfig, n_modes: int) -> ProblemConfig:
    nonlin = BENCHMARK_NONLINEARITY if cfg.nonlinearity == "benchmark" else None
    return ProblemConfig(
        alpha=cfg.alpha,
        n_modes=n_modes,
        t_end=cfg.t_end,
        noise=_noise_spec(cfg),
        nonlinearity=nonlin,
    )


def _echo_config(cfg: RunConfig) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "config.json")
    with open(path, "w", newline="") as fh:
        json.dump(vars(cfg), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _initial_state(cfg: RunConfig) -> State:
    state = State.zero(cfg.modes)
    if cfg.initial == "e1":
        state.u[0] = 1.0
    return state


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.scheme == "both":
        raise ConfigError("scheme: simulate runs one scheme, aee or lie")
    problem = _problem(cfg, cfg.modes)
    plan = StepPlan.for_horizon(cfg.t_end, cfg.steps, cfg.scheme)
    state = integrate(
        problem, plan, sample_index=0, seed=cfg.seed,
        initial_state=_initial_state(cfg),
    )
    payload = {
        "scheme": cfg.scheme,
        "steps": cfg.steps,
        "k": plan.k,
        "t_end": cfg.t_end,
        "u": state.u.tolist(),
        "v": state.v.tolist(),
    }
    if cfg.grid_points > 0:
        x = np.arange(1, cfg.grid_points + 1) / (cfg.grid_points + 1.0)
        j = np.arange(1, cfg.modes + 1)
        basis = math.sqrt(2.0) * np.sin(np.pi * np.outer(x, j))
        payload["x"] = x.tolist()
        payload["u_grid"] = (basis @ state.u).tolist()
        payload["v_grid"] = (basis @ state.v).tolist()
    _echo_config(cfg)
    path = os.path.join(cfg.out, "state.json")
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}")
    return 0


def cmd_study(cfg: RunConfig) -> int:
    schemes = ("aee", "lie") if cfg.scheme == "both" else (cfg.scheme,)
    noise = _noise_spec(cfg)
    k_ref = cfg.t_end / cfg.steps
    if cfg.axis == "temporal":
        spec = temporal_study(
            noise, samples=cfg.samples, seed=cfg.seed, schemes=schemes,
            levels=TEMPORAL_LEVELS, k_ref=k_ref,
        )
        n_modes = cfg.modes
    else:
        spec = spatial_study(
            noise, samples=cfg.samples, seed=cfg.seed, schemes=schemes,
            levels=SPATIAL_LEVELS, n_ref=cfg.modes, k_ref=k_ref,
        )
        n_modes = cfg.modes
    problem = _problem(cfg, n_modes)
    result = run_study(spec, problem, threads=cfg.threads)
    _echo_config(cfg)
    csv_path, svg_path = emit_results(result.records, result.fits, cfg.out, cfg.axis)
    for (scheme, field_name), fit in sorted(result.fits.items()):
        print(
            f"{scheme}-{field_name}: slope {fit.slope:+.4f} "
            f"(r^2 {fit.r_squared:.4f})"
        )
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return 0


def cmd_validate(cfg: RunConfig, cov_fn=None) -> int:
    gamma = 0.0 if cfg.noise == "none" else 1.0
    results = run_validation(cov_fn=cov_fn, gamma=gamma)
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat JSON config file")
    common.add_argument("--axis", choices=_CHOICES["axis"])
    common.add_argument("--noise", choices=_CHOICES["noise"])
    common.add_argument("--exponent", type=float, metavar="REAL")
    common.add_argument("--alpha", type=float, metavar="REAL")
    common.add_argument("--modes", type=int, metavar="INT")
    common.add_argument("--steps", type=int, metavar="INT")
    common.add_argument("--samples", type=int, metavar="INT")
    common.add_argument("--seed", type=int, metavar="INT")
    common.add_argument("--scheme", choices=_CHOICES["scheme"])
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--threads", type=int, metavar="INT")
    common.add_argument("--t-end", type=float, metavar="REAL")
    common.add_argument("--initial", choices=_CHOICES["initial"])
    common.add_argument("--nonlinearity", choices=_CHOICES["nonlinearity"])
    common.add_argument("--grid-points", type=int, metavar="INT")

    parser = argparse.ArgumentParser(
        prog="sdwave",
        description="Spectral integrator for a damped stochastic wave equation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one trajectory")
    sub.add_parser("study", parents=[common], help="run a convergence study")
    sub.add_parser("validate", parents=[common], help="run the self-check suite")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "study":
            return cmd_study(cfg)
        return cmd_validate(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SdwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

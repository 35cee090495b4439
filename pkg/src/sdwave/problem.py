"""Problem-level configuration shared by integrators, studies and the CLI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .noise import NoiseSpec, noise_gammas
from .nonlinearity import NemytskiiSpec
from .spectral import ModeData, make_modes


@dataclass(frozen=True)
class ProblemConfig:
    """Semilinear stochastic damped wave problem on (0,1), Dirichlet.

    noise None means the noise term is absent (every gamma_j = 0);
    nonlinearity None means F = 0.  Initial data defaults to zero and
    is supplied per run where needed.
    """

    alpha: float
    n_modes: int
    t_end: float = 1.0
    noise: NoiseSpec | None = None
    nonlinearity: NemytskiiSpec | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.n_modes < 1:
            raise ConfigError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.t_end <= 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")


def build_modes(config: ProblemConfig, n_modes: int | None = None) -> list[ModeData]:
    """ModeData list for the config (optionally overriding the dimension)."""
    n = config.n_modes if n_modes is None else n_modes
    lams = np.array([(j * np.pi) ** 2 for j in range(1, n + 1)])
    return make_modes(config.alpha, n, noise_gammas(config.noise, lams))

"""Finite-difference plant simulators and boundary measurements.

These serve as ground truth for every experiment. The hyperbolic plant is

    u_t = u_x + g(x) u(0,t) + int_0^x f(x,y) u(y,t) dy,   u(1,t) = U(t),
    Y(t) = u(0,t),

and the parabolic plant is

    u_t = u_xx + lambda(x) u,   u(0,t) = 0, u(1,t) = U(t),
    Y(t) = u_x(1,t).

Stability preconditions: dt <= dx for the upwind transport step and
dt <= 0.4 dx^2 / (1 + lambda_bar dx^2) for forward Euler diffusion with
reaction margin. Compatibility of the initial data with U(0) is the
caller's responsibility; `check_compatibility` emits warnings only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import stepping
from .coeffs import CoefficientSet, HYPERBOLIC, PARABOLIC
from .core import ConfigError, Grid, Profile

_CFL_SLACK = 1.0 + 1e-12


def parabolic_dt_bound(dx: float, lam_bar: float) -> float:
    return 0.4 * dx * dx / (1.0 + lam_bar * dx * dx)


@dataclass
class NoiseModel:
    """Additive Gaussian measurement noise, deterministic under its seed.

    `sigma2` is interpreted as a variance by default; set
    `interpret_as_std` for the Normal(0, sigma) reading.
    """

    sigma2: float
    seed: int
    interpret_as_std: bool = False
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.sigma2 < 0.0:
            raise ConfigError("noise sigma2 must be >= 0")
        self._rng = np.random.default_rng(self.seed)

    @property
    def std(self) -> float:
        return float(self.sigma2 if self.interpret_as_std else np.sqrt(self.sigma2))

    def add(self, y: float) -> float:
        if self.sigma2 == 0.0:
            return y
        return y + self.std * self._rng.standard_normal()

    def add_array(self, y: np.ndarray) -> np.ndarray:
        if self.sigma2 == 0.0:
            return np.asarray(y, dtype=np.float64).copy()
        return y + self.std * self._rng.standard_normal(len(y))


def add_noise(y: float, noise: NoiseModel) -> float:
    return noise.add(y)


class HyperbolicPlantState:
    """State of the hyperbolic plant at one instant."""

    def __init__(self, profile: Profile, coeffs: CoefficientSet, t: float = 0.0):
        if coeffs.plant_class != HYPERBOLIC:
            raise ConfigError("hyperbolic plant needs hyperbolic coefficients")
        self.profile = profile.copy()
        self.coeffs = coeffs
        self.t = float(t)
        grid = profile.grid
        x = grid.x
        fmat = coeffs.f(x[:, None], x[None, :])
        self._wf = stepping.volterra_weights(np.asarray(fmat), grid.dx)
        self._g = np.asarray(coeffs.g(x), dtype=np.float64)
        self._zero_gain = np.zeros(grid.n_points)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    def step(self, u_now: float, dt: float) -> "HyperbolicPlantState":
        self.step_many(np.array([u_now]), dt)
        return self

    def step_many(self, u_bc: np.ndarray, dt: float) -> np.ndarray:
        """Advance len(u_bc) substeps; returns Y sampled before each one."""
        if dt > self.grid.dx * _CFL_SLACK:
            raise ConfigError(
                f"CFL violation: dt={dt} exceeds dx={self.grid.dx} for unit transport"
            )
        u_bc = np.asarray(u_bc, dtype=np.float64)
        y = stepping.hyperbolic_chunk(
            self.profile.values, self._wf, self._g, self._zero_gain,
            np.zeros(len(u_bc)), u_bc, dt, self.grid.dx,
        )
        self.t += dt * len(u_bc)
        return y


class ParabolicPlantState:
    """State of the parabolic reaction-diffusion plant at one instant."""

    def __init__(self, profile: Profile, coeffs: CoefficientSet, t: float = 0.0):
        if coeffs.plant_class != PARABOLIC:
            raise ConfigError("parabolic plant needs parabolic coefficients")
        if profile.grid.n_points < 4:
            raise ConfigError("Neumann sensor stencil needs at least 4 nodes")
        self.profile = profile.copy()
        self.coeffs = coeffs
        self.t = float(t)
        self._lam = np.asarray(coeffs.lam(profile.grid.x), dtype=np.float64)
        self._lam_bar = coeffs.lam_bar(profile.grid.n_points)
        self._zero_gain = np.zeros(profile.grid.n_points)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    def step(self, u_now: float, dt: float) -> "ParabolicPlantState":
        self.step_many(np.array([u_now]), dt)
        return self

    def step_many(self, u_bc: np.ndarray, dt: float) -> np.ndarray:
        """Advance len(u_bc) substeps; returns Y sampled before each one."""
        bound = parabolic_dt_bound(self.grid.dx, self._lam_bar)
        if dt > bound * _CFL_SLACK:
            raise ConfigError(
                f"explicit-scheme stability violation: dt={dt} exceeds {bound:.3e}"
            )
        u_bc = np.asarray(u_bc, dtype=np.float64)
        y = stepping.parabolic_chunk(
            self.profile.values, self._lam, self._zero_gain,
            np.zeros(len(u_bc)), u_bc, dt, self.grid.dx,
        )
        self.t += dt * len(u_bc)
        return y


def step_hyperbolic(state: HyperbolicPlantState, u_now: float, dt: float):
    return state.step(u_now, dt)


def step_parabolic(state: ParabolicPlantState, u_now: float, dt: float):
    return state.step(u_now, dt)


def measure_hyperbolic(state: HyperbolicPlantState) -> float:
    """Y(t) = u(0, t)."""
    return float(state.profile.values[0])


def measure_parabolic(state: ParabolicPlantState) -> float:
    """Y(t) = u_x(1, t) via the one-sided stencil (exact for affine u)."""
    return float(stepping.neumann_right(state.profile.values, state.grid.dx))


def check_compatibility(u0: Profile, u0_boundary: float, plant_class: str) -> None:
    """Warn when the initial profile does not match the boundary data."""
    if abs(u0.values[-1] - u0_boundary) > 1e-9 * max(1.0, abs(u0_boundary)):
        warnings.warn(
            f"initial profile u0(1)={u0.values[-1]} does not match U(0)={u0_boundary}",
            stacklevel=2,
        )
    if plant_class == PARABOLIC and abs(u0.values[0]) > 1e-12:
        warnings.warn(
            f"initial profile u0(0)={u0.values[0]} violates the Dirichlet condition",
            stacklevel=2,
        )

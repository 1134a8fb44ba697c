"""PDE-form backstepping observers, integrated numerically.

These are the brute-force oracles the explicit moving-horizon estimators
are verified against. They reuse the plant stencils and time step exactly,
so MHE-vs-observer comparisons isolate formula error from scheme error.
"""

from __future__ import annotations

import numpy as np

from . import stepping
from .coeffs import CoefficientSet, HYPERBOLIC, PARABOLIC
from .core import ConfigError, Grid, Profile, l2_norm
from .kernels import GainVector
from .plant import _CFL_SLACK, parabolic_dt_bound


class ObserverState:
    """Observer profile u_hat plus gain, advanced by (Y, U) samples."""

    def __init__(
        self,
        profile: Profile,
        gain: GainVector,
        coeffs: CoefficientSet,
        t: float = 0.0,
    ):
        if gain.grid.n_points != profile.grid.n_points:
            raise ConfigError("gain and profile grids differ")
        self.profile = profile.copy()
        self.gain = gain
        self.coeffs = coeffs
        self.plant_class = coeffs.plant_class
        self.t = float(t)
        grid = profile.grid
        x = grid.x
        if self.plant_class == HYPERBOLIC:
            fmat = coeffs.f(x[:, None], x[None, :])
            self._wf = stepping.volterra_weights(np.asarray(fmat), grid.dx)
            self._g = np.asarray(coeffs.g(x), dtype=np.float64)
        else:
            self._lam = np.asarray(coeffs.lam(x), dtype=np.float64)
            self._lam_bar = coeffs.lam_bar(grid.n_points)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    def step(self, y_now: float, u_now: float, dt: float) -> "ObserverState":
        self.step_many(np.array([y_now]), np.array([u_now]), dt)
        return self

    def step_many(self, y_in: np.ndarray, u_bc: np.ndarray, dt: float) -> None:
        """Advance len(u_bc) substeps driven by per-substep (Y, U) samples."""
        y_in = np.asarray(y_in, dtype=np.float64)
        u_bc = np.asarray(u_bc, dtype=np.float64)
        if y_in.shape != u_bc.shape:
            raise ConfigError("Y and U sample chunks must have equal length")
        if self.plant_class == HYPERBOLIC:
            if dt > self.grid.dx * _CFL_SLACK:
                raise ConfigError(f"CFL violation: dt={dt} exceeds dx={self.grid.dx}")
            stepping.hyperbolic_chunk(
                self.profile.values, self._wf, self._g, self.gain.values,
                y_in, u_bc, dt, self.grid.dx,
            )
        else:
            bound = parabolic_dt_bound(self.grid.dx, self._lam_bar)
            if dt > bound * _CFL_SLACK:
                raise ConfigError(
                    f"stability violation: dt={dt} exceeds {bound:.3e}"
                )
            stepping.parabolic_chunk(
                self.profile.values, self._lam, self.gain.values,
                y_in, u_bc, dt, self.grid.dx,
            )
        self.t += dt * len(u_bc)


def step_observer_hyperbolic(obs: ObserverState, y_now, u_now, dt):
    return obs.step(y_now, u_now, dt)


def step_observer_parabolic(obs: ObserverState, y_now, u_now, dt):
    return obs.step(y_now, u_now, dt)


def error_norm(plant_profile: Profile, obs_profile: Profile) -> float:
    """L2 norm of the estimation error u - u_hat."""
    if plant_profile.grid.n_points != obs_profile.grid.n_points:
        raise ConfigError("profiles live on different grids")
    return l2_norm(Profile(plant_profile.grid, plant_profile.values - obs_profile.values))

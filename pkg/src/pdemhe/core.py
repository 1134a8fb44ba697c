"""Discretization primitives shared by every other module.

The spatial domain is always [0, 1] on a uniform grid. Profiles are sampled
spatial functions on such a grid at one time instant; signal histories are
uniformly sampled scalar time series kept over a moving window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class PdeMheError(Exception):
    """Base class for all package errors."""


class ConfigError(PdeMheError):
    """Invalid configuration or precondition violation (CLI exit code 2)."""


class ConvergenceError(PdeMheError):
    """An iterative solve did not reach tolerance (CLI exit code 3)."""


class OutOfWindowError(PdeMheError):
    """A signal or snapshot was requested outside the stored span."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 1] with nodes x_i = i * dx."""

    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ConfigError(f"grid needs at least 3 nodes, got {self.n_points}")

    @property
    def dx(self) -> float:
        return 1.0 / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_points)

    def refine(self, factor: int = 2) -> "Grid":
        """Grid with dx divided by `factor` (shares all coarse nodes)."""
        return Grid(factor * (self.n_points - 1) + 1)


@dataclass
class Profile:
    """Sampled spatial function u(., t) on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_points,):
            raise ConfigError(
                f"profile length {self.values.shape} does not match grid "
                f"({self.grid.n_points} nodes)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("profile contains non-finite values")

    def copy(self) -> "Profile":
        return Profile(self.grid, self.values.copy())

    @classmethod
    def zeros(cls, grid: Grid) -> "Profile":
        return cls(grid, np.zeros(grid.n_points))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Profile":
        return cls(grid, np.full(grid.n_points, float(value)))


def trapezoid_integral(values, dx: float) -> float:
    """Composite trapezoid rule on uniformly spaced samples.

    Exact for affine integrands; O(dx^2) for smooth ones.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ConfigError("trapezoid rule needs at least 2 samples")
    if not np.all(np.isfinite(v)):
        raise ConfigError("non-finite integrand")
    return float(dx * (v.sum() - 0.5 * (v[0] + v[-1])))


def l2_norm(p: Profile) -> float:
    """L2(0,1) norm of a profile via the trapezoid rule."""
    return float(np.sqrt(trapezoid_integral(p.values ** 2, p.grid.dx)))


@dataclass
class SignalHistory:
    """Uniformly sampled scalar signal over a moving window.

    Timestamps are strictly increasing with spacing `dt`; once `capacity`
    samples are stored, each push evicts the oldest one.
    """

    dt: float
    capacity: int
    _t: np.ndarray = field(init=False, repr=False)
    _v: np.ndarray = field(init=False, repr=False)
    _count: int = field(init=False, default=0, repr=False)

    def __post_init__(self):
        if self.dt <= 0.0 or self.capacity < 2:
            raise ConfigError("history needs dt > 0 and capacity >= 2")
        self._t = np.empty(self.capacity)
        self._v = np.empty(self.capacity)
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def push(self, t: float, value: float) -> None:
        if not np.isfinite(value):
            raise ConfigError(f"non-finite sample at t={t}")
        if self._count:
            gap = t - self._t[self._count - 1]
            if gap <= 0.0 or abs(gap - self.dt) > 1e-9 * max(1.0, abs(t)):
                raise ConfigError(
                    f"timestamp gap {gap} at t={t} (expected spacing {self.dt})"
                )
        if self._count == self.capacity:
            self._t[:-1] = self._t[1:]
            self._v[:-1] = self._v[1:]
            self._count -= 1
        self._t[self._count] = t
        self._v[self._count] = value
        self._count += 1

    @property
    def t_first(self) -> float:
        if not self._count:
            raise OutOfWindowError("empty history")
        return float(self._t[0])

    @property
    def t_last(self) -> float:
        if not self._count:
            raise OutOfWindowError("empty history")
        return float(self._t[self._count - 1])

    def times(self) -> np.ndarray:
        return self._t[: self._count]

    def samples(self) -> np.ndarray:
        return self._v[: self._count]

    def value_at_offset(self, k: int) -> float:
        """Sample k positions back from the newest (k=0 is the newest)."""
        if k < 0 or k >= self._count:
            raise OutOfWindowError(f"offset {k} outside stored {self._count} samples")
        return float(self._v[self._count - 1 - k])


def history_interpolate(h: SignalHistory, t: float) -> float:
    """Linear interpolation of a history at time t inside the stored span."""
    n = len(h)
    if n == 0:
        raise OutOfWindowError("empty history")
    tol = 1e-9 * max(1.0, abs(t))
    if t < h.t_first - tol or t > h.t_last + tol:
        raise OutOfWindowError(
            f"t={t} outside stored span [{h.t_first}, {h.t_last}]"
        )
    ts, vs = h.times(), h.samples()
    return float(np.interp(min(max(t, ts[0]), ts[-1]), ts, vs))


@dataclass
class SnapshotQueue:
    """Time-ordered queue of profiles spanning at least one horizon.

    Profiles may be pushed at a decimated stride; retrieval linearly
    interpolates between the two bracketing snapshots.
    """

    dt: float
    span: float
    _t: list = field(init=False, default_factory=list, repr=False)
    _p: list = field(init=False, default_factory=list, repr=False)

    def push(self, t: float, profile: Profile) -> None:
        if self._t:
            if t <= self._t[-1]:
                raise ConfigError(f"snapshot timestamps must increase (t={t})")
            if self._p[-1].grid.n_points != profile.grid.n_points:
                raise ConfigError("snapshot grid mismatch")
        self._t.append(float(t))
        self._p.append(profile.copy())
        # keep one snapshot at or before t - span so interpolation stays valid
        while len(self._t) > 2 and self._t[1] <= t - self.span:
            self._t.pop(0)
            self._p.pop(0)

    def __len__(self) -> int:
        return len(self._t)

    def get(self, t: float) -> Profile:
        if not self._t:
            raise OutOfWindowError("empty snapshot queue")
        tol = 1e-9 * max(1.0, abs(t))
        if t < self._t[0] - tol or t > self._t[-1] + tol:
            raise OutOfWindowError(
                f"snapshot at t={t} outside span [{self._t[0]}, {self._t[-1]}]"
            )
        ts = np.asarray(self._t)
        i = int(np.searchsorted(ts, t))
        if i < len(ts) and abs(ts[i] - t) <= tol:
            return self._p[i].copy()
        if i > 0 and abs(ts[i - 1] - t) <= tol:
            return self._p[i - 1].copy()
        lo, hi = self._p[i - 1], self._p[i]
        a = (t - ts[i - 1]) / (ts[i] - ts[i - 1])
        return Profile(lo.grid, (1.0 - a) * lo.values + a * hi.values)

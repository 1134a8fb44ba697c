"""Explicit moving-horizon estimators.

The hyperbolic MHE maps the measured output and input signals over the
most recent unit window onto the current state estimate:

    w_hat(x, t) = int_{t+x-1}^t theta(t+x-tau) Y(tau) dtau + U(t+x-1),
    u_hat(x, t) = w_hat(x, t) - int_0^x k(x, y) w_hat(y, t) dy.

The parabolic MHE additionally needs one profile snapshot w_hat(., t-T)
from the start of the horizon and evaluates a truncated eigenfunction
series of the driven heat equation:

    w_hat(x,t) = sum_n phi_n(x) [ e^{-n^2 pi^2 T} <w_hat(., t-T), phi_n>
                                  + c_n J_n^{Y - k(1,1) U}(t)
                                  + b_n J_n^{U}(t) ],
    u_hat(x,t) = w_hat(x,t) - int_x^1 k(y, x) w_hat(y, t) dy,

with phi_n(x) = sqrt(2) sin(n pi x), c_n = int_0^1 l(1,y) phi_n(y) dy,
b_n = -pi sqrt(2) n (-1)^n, and exponentially discounted window integrals

    J_n^S(t) = int_{t-T}^t e^{-n^2 pi^2 (t-tau)} S(tau) dtau

maintained recursively from the previous timestep so the per-step cost is
independent of the elapsed simulation time.
"""

from __future__ import annotations

import math

import numpy as np

from .accel import NUMBA_ENABLED, njit
from .coeffs import CoefficientSet, PARABOLIC
from .core import (
    ConfigError,
    Grid,
    OutOfWindowError,
    Profile,
    SignalHistory,
    SnapshotQueue,
)
from .kernels import GainVector, KernelTable
from .stepping import volterra_weights

_SQRT2 = math.sqrt(2.0)


# --- backstepping transforms -------------------------------------------------


def _lower_weights(k: KernelTable) -> np.ndarray:
    return volterra_weights(k.values, k.grid.dx)


def _upper_weights(k: KernelTable) -> np.ndarray:
    """V with (V @ w)[j] = int_{x_j}^1 k(y, x_j) w(y) dy (transposed kernel)."""
    n = k.grid.n_points
    v = np.tril(k.values).T * k.grid.dx
    v[:, n - 1] *= 0.5
    idx = np.arange(n)
    v[idx, idx] *= 0.5
    v[n - 1, n - 1] = 0.0
    return v


def forward_transform_hyperbolic(w: Profile, k: KernelTable) -> Profile:
    """u(x) = w(x) - int_0^x k(x, y) w(y) dy."""
    if w.grid.n_points != k.grid.n_points:
        raise ConfigError("profile and kernel grids differ")
    return Profile(w.grid, w.values - _lower_weights(k) @ w.values)


def inverse_transform_hyperbolic(u: Profile, l: KernelTable) -> Profile:
    """w(x) = u(x) + int_0^x l(x, y) u(y) dy."""
    if u.grid.n_points != l.grid.n_points:
        raise ConfigError("profile and kernel grids differ")
    return Profile(u.grid, u.values + _lower_weights(l) @ u.values)


def forward_transform_parabolic(w: Profile, k: KernelTable) -> Profile:
    """u(x) = w(x) - int_x^1 k(y, x) w(y) dy."""
    if w.grid.n_points != k.grid.n_points:
        raise ConfigError("profile and kernel grids differ")
    return Profile(w.grid, w.values - _upper_weights(k) @ w.values)


def inverse_transform_parabolic(u: Profile, l: KernelTable) -> Profile:
    """w(x) = u(x) + int_x^1 l(y, x) u(y) dy."""
    if u.grid.n_points != l.grid.n_points:
        raise ConfigError("profile and kernel grids differ")
    return Profile(u.grid, u.values + _upper_weights(l) @ u.values)


# --- hyperbolic window quadrature (hot path, numba + numpy twins) ------------


def _hyp_window_numpy(theta, dx, ts0, dt, ys, us, t):
    n = theta.shape[0]
    w = np.empty(n)
    n_samp = ys.shape[0]
    pos_t = (t - ts0) / dt
    m = int(round(pos_t))
    for i in range(n):
        xi = i * dx
        a = t + xi - 1.0
        pos_a = (a - ts0) / dt
        j0 = int(math.ceil(pos_a - 1e-9))
        taus = ts0 + dt * np.arange(j0, m + 1)
        zeta = t + xi - taus
        f = np.interp(zeta, np.linspace(0.0, 1.0, n), theta) * ys[j0 : m + 1]
        integral = 0.0
        if m > j0:
            integral = dt * (f.sum() - 0.5 * (f[0] + f[-1]))
        h = ts0 + j0 * dt - a
        if h > 1e-14 and j0 >= 1:
            frac = (a - (ts0 + (j0 - 1) * dt)) / dt
            ya = (1.0 - frac) * ys[j0 - 1] + frac * ys[j0]
            integral += 0.5 * h * (theta[n - 1] * ya + f[0])
        # U(t + x - 1), linearly interpolated
        if h > 1e-14 and j0 >= 1:
            frac = (a - (ts0 + (j0 - 1) * dt)) / dt
            ua = (1.0 - frac) * us[j0 - 1] + frac * us[j0]
        else:
            ua = us[min(j0, n_samp - 1)]
        w[i] = integral + ua
    return w


@njit(cache=True)
def _hyp_window_jit(theta, dx, ts0, dt, ys, us, t):  # pragma: no cover
    n = theta.shape[0]
    w = np.empty(n)
    n_samp = ys.shape[0]
    pos_t = (t - ts0) / dt
    m = int(round(pos_t))
    for i in range(n):
        xi = i * dx
        a = t + xi - 1.0
        pos_a = (a - ts0) / dt
        j0 = int(math.ceil(pos_a - 1e-9))
        integral = 0.0
        f0 = 0.0
        for j in range(j0, m + 1):
            zeta = t + xi - (ts0 + dt * j)
            p = zeta / dx
            q = int(p)
            if q > n - 2:
                q = n - 2
            if q < 0:
                q = 0
            th = theta[q] + (theta[q + 1] - theta[q]) * (p - q)
            fj = th * ys[j]
            if j == j0:
                f0 = fj
            if m > j0:
                if j == j0 or j == m:
                    integral += 0.5 * fj
                else:
                    integral += fj
        integral *= dt
        h = ts0 + j0 * dt - a
        if h > 1e-14 and j0 >= 1:
            frac = (a - (ts0 + (j0 - 1) * dt)) / dt
            ya = (1.0 - frac) * ys[j0 - 1] + frac * ys[j0]
            ua = (1.0 - frac) * us[j0 - 1] + frac * us[j0]
            integral += 0.5 * h * (theta[n - 1] * ya + f0)
        else:
            jj = j0
            if jj > n_samp - 1:
                jj = n_samp - 1
            ua = us[jj]
        w[i] = integral + ua
    return w


_hyp_window = _hyp_window_jit if NUMBA_ENABLED else _hyp_window_numpy


class HyperbolicMheContext:
    """Explicit MHE for the hyperbolic PIDE; horizon fixed at one time unit.

    The estimate at time t depends only on (Y, U) samples in [t-1, t], so
    the histories keep exactly one window plus one bracketing sample.
    """

    HORIZON = 1.0

    def __init__(self, k: KernelTable, l: KernelTable, theta: GainVector, dt: float):
        if not (k.grid.n_points == l.grid.n_points == theta.grid.n_points):
            raise ConfigError("kernel and gain grids differ")
        self.k = k
        self.l = l
        self.theta = theta
        self.dt = float(dt)
        cap = int(round(self.HORIZON / dt)) + 2
        self.y_hist = SignalHistory(dt, cap)
        self.u_hist = SignalHistory(dt, cap)
        self._kw = _lower_weights(k)

    @property
    def grid(self) -> Grid:
        return self.k.grid

    def update(self, t: float, y_now: float, u_now: float) -> None:
        self.y_hist.push(t, y_now)
        self.u_hist.push(t, u_now)

    def estimate(self, t: float) -> Profile:
        if t < self.HORIZON - 1e-12:
            raise OutOfWindowError(f"hyperbolic MHE needs t >= 1, got t={t}")
        tol = 1e-9 * max(1.0, abs(t))
        if (
            len(self.y_hist) == 0
            or self.y_hist.t_first > t - self.HORIZON + tol
            or self.y_hist.t_last < t - tol
        ):
            raise OutOfWindowError(
                f"histories do not span [{t - self.HORIZON}, {t}]"
            )
        w = _hyp_window(
            self.theta.values,
            self.grid.dx,
            self.y_hist.t_first,
            self.dt,
            self.y_hist.samples(),
            self.u_hist.samples(),
            t,
        )
        return Profile(self.grid, w - self._kw @ w)


def mhe_hyperbolic_estimate(ctx: HyperbolicMheContext, t: float) -> Profile:
    return ctx.estimate(t)


# --- parabolic MHE -----------------------------------------------------------


class ParabolicMheContext:
    """Explicit MHE for the reaction-diffusion plant.

    Maintains per-mode discounted window integrals J recursively; the
    recursion reproduces the direct trapezoid quadrature of the stored
    window exactly (up to round-off), which `direct_window_integrals`
    exposes for resynchronization checks.
    """

    def __init__(
        self,
        k: KernelTable,
        l: KernelTable,
        horizon: float,
        n_modes: int,
        dt: float,
        uhat0: float,
        snapshot_stride: int = 1,
        coeffs: CoefficientSet | None = None,
    ):
        if k.grid.n_points != l.grid.n_points:
            raise ConfigError("kernel grids differ")
        if horizon <= 0.0 or n_modes < 1:
            raise ConfigError("need horizon > 0 and at least one series mode")
        steps = horizon / dt
        self.window_steps = int(round(steps))
        if abs(steps - self.window_steps) > 1e-6:
            raise ConfigError("horizon must be an integer multiple of dt")
        self.k = k
        self.l = l
        self.horizon = float(horizon)
        self.n_modes = int(n_modes)
        self.dt = float(dt)
        self.uhat0 = float(uhat0)
        self.snapshot_stride = int(snapshot_stride)

        grid = k.grid
        x = grid.x
        modes = np.arange(1, n_modes + 1, dtype=np.float64)
        self._rates = (modes * np.pi) ** 2
        self._decay_dt = np.exp(-self._rates * dt)
        self._decay_t = np.exp(-self._rates * horizon)
        self._phi = _SQRT2 * np.sin(np.outer(modes, np.pi * x))  # (N, n)
        wq = np.full(grid.n_points, grid.dx)
        wq[0] *= 0.5
        wq[-1] *= 0.5
        self._inner_w = wq
        self.c = self._phi @ (wq * l.values[-1, :])
        self.b = -np.pi * _SQRT2 * modes * ((-1.0) ** modes)
        self.k11 = float(k.values[-1, -1])
        if coeffs is not None and coeffs.plant_class == PARABOLIC:
            lam_int = float(np.sum(wq * coeffs.lam(x)))
            if abs(self.k11 + 0.5 * lam_int) > 50.0 * grid.dx ** 2 * max(1.0, abs(lam_int)):
                raise ConfigError(
                    f"kernel corner k(1,1)={self.k11} inconsistent with "
                    f"-(1/2) int lambda = {-0.5 * lam_int}"
                )

        cap = self.window_steps + 2
        self.y_hist = SignalHistory(dt, cap)
        self.u_hist = SignalHistory(dt, cap)
        self.j_meas = np.zeros(n_modes)  # window integrals of Y - k(1,1) U
        self.j_input = np.zeros(n_modes)  # window integrals of U
        self.snapshots = SnapshotQueue(dt * snapshot_stride, horizon)
        self._s1_prev = 0.0
        self._s2_prev = 0.0
        self._have_prev = False
        self._last_snapshot_t = None

        self.uhat0_profile = Profile.constant(grid, uhat0)
        self._lw = _upper_weights(l)
        self._kwt = _upper_weights(k)
        self.w_warmup = Profile(
            grid, self.uhat0_profile.values + self._lw @ self.uhat0_profile.values
        )

    @property
    def grid(self) -> Grid:
        return self.k.grid

    # -- signal ingestion -----------------------------------------------------

    def update(self, t: float, y_now: float, u_now: float) -> None:
        """Push one (Y, U) sample and advance the window recursions."""
        self.y_hist.push(t, y_now)
        self.u_hist.push(t, u_now)
        s1 = y_now - self.k11 * u_now
        s2 = u_now
        if self._have_prev:
            self.j_meas = self._decay_dt * self.j_meas + 0.5 * self.dt * (
                s1 + self._decay_dt * self._s1_prev
            )
            self.j_input = self._decay_dt * self.j_input + 0.5 * self.dt * (
                s2 + self._decay_dt * self._s2_prev
            )
            if len(self.y_hist) == self.window_steps + 2:
                # the trailing trapezoid cell leaves the window, discounted
                y_exit = self.y_hist.value_at_offset(self.window_steps)
                u_exit = self.u_hist.value_at_offset(self.window_steps)
                y_exit2 = self.y_hist.value_at_offset(self.window_steps + 1)
                u_exit2 = self.u_hist.value_at_offset(self.window_steps + 1)
                e1 = y_exit - self.k11 * u_exit
                e2 = y_exit2 - self.k11 * u_exit2
                self.j_meas -= 0.5 * self.dt * self._decay_t * (
                    e1 + self._decay_dt * e2
                )
                self.j_input -= 0.5 * self.dt * self._decay_t * (
                    u_exit + self._decay_dt * u_exit2
                )
        self._s1_prev = s1
        self._s2_prev = s2
        self._have_prev = True

    def direct_window_integrals(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Direct trapezoid quadrature of the stored window (resync oracle)."""
        ts = self.y_hist.times()
        keep = ts >= t - self.horizon - 1e-9 * max(1.0, abs(t))
        ts = ts[keep]
        ys = self.y_hist.samples()[keep]
        us = self.u_hist.samples()[keep]
        disc = np.exp(-np.outer(self._rates, t - ts))  # (N, m)
        s1 = ys - self.k11 * us
        wts = np.full(ts.shape[0], self.dt)
        wts[0] *= 0.5
        wts[-1] *= 0.5
        return disc @ (wts * s1), disc @ (wts * us)

    # -- snapshots and estimates ----------------------------------------------

    def push_snapshot(self, t: float, w_profile: Profile) -> None:
        if (
            self._last_snapshot_t is None
            or t - self._last_snapshot_t
            >= self.snapshot_stride * self.dt - 1e-9 * max(1.0, abs(t))
        ):
            self.snapshots.push(t, w_profile)
            self._last_snapshot_t = t

    def record_warmup(self, t: float) -> Profile:
        """During t < T the estimate is the configured constant profile."""
        self.push_snapshot(t, self.w_warmup)
        return self.uhat0_profile.copy()

    def estimate(self, t: float) -> Profile:
        """Assemble the truncated series estimate at time t >= T."""
        try:
            w_prev = self.snapshots.get(t - self.horizon)
        except OutOfWindowError as exc:
            raise OutOfWindowError(
                f"no snapshot available at t-T={t - self.horizon}; "
                "the MHE is still warming up"
            ) from exc
        proj = self._phi @ (self._inner_w * w_prev.values)
        coeff = self._decay_t * proj + self.c * self.j_meas + self.b * self.j_input
        w = coeff @ self._phi
        self.push_snapshot(t, Profile(self.grid, w))
        return Profile(self.grid, w - self._kwt @ w)

    # -- checkpointing --------------------------------------------------------

    def save(self, path) -> None:
        """Checkpoint to a text format (floats as %.17g, one array per line)."""
        def fmt(arr):
            return " ".join(f"{v:.17g}" for v in np.atleast_1d(arr))

        with open(path, "w", newline="\n") as fh:
            fh.write("pdemhe-parabolic-context 1\n")
            fh.write(f"n_points {self.grid.n_points}\n")
            fh.write(f"dt {self.dt:.17g}\n")
            fh.write(f"horizon {self.horizon:.17g}\n")
            fh.write(f"n_modes {self.n_modes}\n")
            fh.write(f"uhat0 {self.uhat0:.17g}\n")
            fh.write(f"snapshot_stride {self.snapshot_stride}\n")
            fh.write(f"k {fmt(self.k.values.ravel())}\n")
            fh.write(f"l {fmt(self.l.values.ravel())}\n")
            fh.write(f"j_meas {fmt(self.j_meas)}\n")
            fh.write(f"j_input {fmt(self.j_input)}\n")
            fh.write(f"have_prev {int(self._have_prev)}\n")
            fh.write(f"s_prev {self._s1_prev:.17g} {self._s2_prev:.17g}\n")
            fh.write(f"y_hist {fmt(self.y_hist.times())} | {fmt(self.y_hist.samples())}\n")
            fh.write(f"u_hist {fmt(self.u_hist.times())} | {fmt(self.u_hist.samples())}\n")
            fh.write(f"n_snapshots {len(self.snapshots)}\n")
            for ts, prof in zip(self.snapshots._t, self.snapshots._p):
                fh.write(f"snapshot {ts:.17g} {fmt(prof.values)}\n")

    @classmethod
    def load(cls, path) -> "ParabolicMheContext":
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh]
        if not lines or not lines[0].startswith("pdemhe-parabolic-context"):
            raise ConfigError(f"{path} is not a context checkpoint")
        kv = {}
        snapshots = []
        for ln in lines[1:]:
            if not ln:
                continue
            key, _, rest = ln.partition(" ")
            if key == "snapshot":
                snapshots.append(rest)
            else:
                kv[key] = rest
        def parse(text):
            return np.array(text.split(), dtype=np.float64)

        n = int(kv["n_points"])
        grid = Grid(n)
        k = KernelTable(grid, parse(kv["k"]).reshape(n, n))
        l = KernelTable(grid, parse(kv["l"]).reshape(n, n))
        ctx = cls(
            k,
            l,
            float(kv["horizon"]),
            int(kv["n_modes"]),
            float(kv["dt"]),
            float(kv["uhat0"]),
            int(kv["snapshot_stride"]),
        )
        ctx.j_meas = parse(kv["j_meas"])
        ctx.j_input = parse(kv["j_input"])
        ctx._have_prev = bool(int(kv["have_prev"]))
        s1, s2 = kv["s_prev"].split()
        ctx._s1_prev, ctx._s2_prev = float(s1), float(s2)
        for key, hist in (("y_hist", ctx.y_hist), ("u_hist", ctx.u_hist)):
            tpart, _, vpart = kv[key].partition(" | ")
            ts = parse(tpart)
            vs = parse(vpart)
            for tv, vv in zip(ts, vs):
                hist.push(tv, vv)
        for rest in snapshots:
            tstr, _, vals = rest.partition(" ")
            ctx.push_snapshot(float(tstr), Profile(grid, parse(vals)))
        return ctx


def mhe_parabolic_update(ctx: ParabolicMheContext, t, y_now, u_now, dt=None):
    if dt is not None and abs(dt - ctx.dt) > 1e-12:
        raise ConfigError("dt does not match the context sampling period")
    ctx.update(t, y_now, u_now)
    return ctx


def mhe_parabolic_estimate(ctx: ParabolicMheContext, t: float) -> Profile:
    return ctx.estimate(t)


# --- overshoot constants and the contraction condition -----------------------


def parabolic_overshoot(lam_bar: float) -> float:
    """M = (1 + lb e^{2 lb})^2 e^{lb e^{2 lb}}."""
    a = lam_bar * math.exp(2.0 * lam_bar)
    if a > 700.0:
        return math.inf
    return (1.0 + a) ** 2 * math.exp(a)


def hyperbolic_overshoot(m_f: float, c: float) -> float:
    """M = e^c (1 + (M_f e^{M_f}) e^{M_f e^{M_f}}) (1 + M_f e^{M_f})."""
    a = m_f * math.exp(m_f)
    if a > 700.0:
        return math.inf
    return math.exp(c) * (1.0 + a * math.exp(a)) * (1.0 + a)


def contraction_threshold(coeffs: CoefficientSet, n_points: int = 201) -> float:
    """Horizon length beyond which the per-window error map is a contraction:
    ln(M) / pi^2 with M the parabolic overshoot constant."""
    if coeffs.plant_class != PARABOLIC:
        raise ConfigError("contraction threshold is defined for parabolic plants")
    return math.log(parabolic_overshoot(coeffs.lam_bar(n_points))) / math.pi ** 2

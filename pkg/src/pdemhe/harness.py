"""Experiment harness: batch simulation, MHE/observer comparison, reports.

The batch pipeline for one scenario is

    plant pass  ->  noisy measurements  ->  MHE pass  ->  observer pass,

all on the same time grid, with profiles and error norms recorded every
`output.stride` steps. CSV output uses 17 significant digits so repeated
runs with the same config and seed are byte identical.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels, mhe
from .accel import backend_name
from .coeffs import HYPERBOLIC, PARABOLIC, CoefficientSet
from .config import ScenarioConfig
from .core import Grid, Profile, l2_norm
from .observer import ObserverState
from .plant import (
    HyperbolicPlantState,
    NoiseModel,
    ParabolicPlantState,
    measure_hyperbolic,
    measure_parabolic,
)


@dataclass
class Pipeline:
    """Kernel tables and gains precomputed for one scenario."""

    cfg: ScenarioConfig
    coeffs: CoefficientSet
    k: kernels.KernelTable
    l: kernels.KernelTable
    gain: kernels.GainVector
    theta: kernels.GainVector | None
    kernel_time: float

    @property
    def grid(self) -> Grid:
        return self.cfg.grid


def build_pipeline(cfg: ScenarioConfig) -> Pipeline:
    cfg.validate()
    coeffs = cfg.coefficient_set()
    grid = cfg.grid
    tic = time.perf_counter()
    if cfg.plant_class == HYPERBOLIC:
        k = kernels.solve_hyperbolic_kernel(coeffs, grid, cfg.tol, cfg.max_iter)
        l = kernels.invert_kernel(k, cfg.tol, cfg.max_iter)
        gain = kernels.observer_gain_hyperbolic(coeffs, k)
        theta = kernels.theta_kernel(gain, l)
    else:
        k = kernels.solve_parabolic_kernel(coeffs, grid, cfg.tol, cfg.max_iter)
        l = kernels.invert_kernel(k, cfg.tol, cfg.max_iter)
        gain = kernels.observer_gain_parabolic(k)
        theta = None
    return Pipeline(cfg, coeffs, k, l, gain, theta, time.perf_counter() - tic)


@dataclass
class RunSummary:
    cfg: ScenarioConfig
    times: np.ndarray                 # record instants
    plant_profiles: np.ndarray        # (n_records, n_points)
    mhe_profiles: np.ndarray
    observer_profiles: np.ndarray | None
    y_clean: np.ndarray               # per-step measurements
    y_noisy: np.ndarray
    u_values: np.ndarray
    engagement_time: float
    timings: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.cfg.grid

    def error_series(self, which: str = "mhe") -> np.ndarray:
        est = self.mhe_profiles if which == "mhe" else self.observer_profiles
        diff = self.plant_profiles - est
        dx = self.grid.dx
        w = np.full(self.grid.n_points, dx)
        w[0] *= 0.5
        w[-1] *= 0.5
        return np.sqrt((diff * diff) @ w)

    def plant_norms(self) -> np.ndarray:
        vals = self.plant_profiles
        dx = self.grid.dx
        w = np.full(self.grid.n_points, dx)
        w[0] *= 0.5
        w[-1] *= 0.5
        return np.sqrt((vals * vals) @ w)

    @property
    def final_error(self) -> float:
        return float(self.error_series()[-1])

    def decay_slope(self, which: str = "mhe") -> float:
        return fit_decay_slope(self.times, self.error_series(which),
                               self.engagement_time)

    def contraction_ratios(self, which: str = "mhe") -> list[float]:
        """Error ratios across consecutive horizon-length windows."""
        period = (self.cfg.horizon if self.cfg.plant_class == PARABOLIC
                  else mhe.HyperbolicMheContext.HORIZON)
        errs = self.error_series(which)
        floor = 1e-12 * max(1.0, float(np.max(errs)))
        ratios = []
        t0 = self.engagement_time
        j = 0
        while True:
            ta, tb = t0 + j * period, t0 + (j + 1) * period
            ia = _record_index(self.times, ta)
            ib = _record_index(self.times, tb)
            if ia is None or ib is None:
                break
            if errs[ia] <= floor:
                break
            ratios.append(float(errs[ib] / errs[ia]))
            j += 1
        return ratios


def _record_index(times: np.ndarray, t: float) -> int | None:
    if len(times) == 0:
        return None
    step = times[1] - times[0] if len(times) > 1 else 1.0
    i = int(round((t - times[0]) / step))
    if 0 <= i < len(times) and abs(times[i] - t) < 1e-9 * max(1.0, abs(t)):
        return i
    return None


def fit_decay_slope(times, errs, t_start, floor=None) -> float:
    """Least-squares slope of log error past t_start, ignoring the noise
    floor (points below 1e-8 of the post-engagement peak are dropped, and
    the fit stops at the running minimum so a noise plateau does not bias
    it)."""
    times = np.asarray(times)
    errs = np.asarray(errs)
    sel = times >= t_start - 1e-12
    t, e = times[sel], errs[sel]
    if len(e) < 2 or np.max(e) <= 0.0:
        return math.nan
    if floor is None:
        floor = 1e-8 * float(np.max(e))
    stop = int(np.argmin(e)) + 1
    t, e = t[:stop], e[:stop]
    keep = e > floor
    t, e = t[keep], e[keep]
    if len(e) < 2:
        return math.nan
    return float(np.polyfit(t, np.log(e), 1)[0])


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: str | None = None,
    with_observer: bool = False,
    pipeline: Pipeline | None = None,
) -> RunSummary:
    """Simulate the plant, run the MHE over the noisy record, optionally run
    the observer PDE on the same record, and write CSV/JSON reports."""
    pipe = pipeline if pipeline is not None else build_pipeline(cfg)
    grid = pipe.grid
    dt = cfg.dt
    stride = cfg.output_stride
    n_steps = int(round(cfg.total_time / dt))
    n_blocks = n_steps // stride
    n_steps = n_blocks * stride
    times_all = np.arange(n_steps + 1) * dt
    u_values = np.asarray(cfg.input_fn(times_all), dtype=np.float64)
    rec_times = times_all[::stride]

    engagement = (cfg.horizon if cfg.plant_class == PARABOLIC
                  else mhe.HyperbolicMheContext.HORIZON)

    # plant pass
    tic = time.perf_counter()
    y_clean = np.empty(n_steps + 1)
    plant_profiles = np.empty((n_blocks + 1, grid.n_points))
    if cfg.plant_class == HYPERBOLIC:
        state = HyperbolicPlantState(cfg.u0_profile(), pipe.coeffs)
    else:
        state = ParabolicPlantState(cfg.u0_profile(), pipe.coeffs)
    for b in range(n_blocks):
        m0 = b * stride
        plant_profiles[b] = state.profile.values
        y_clean[m0:m0 + stride] = state.step_many(u_values[m0 + 1:m0 + stride + 1], dt)
    plant_profiles[n_blocks] = state.profile.values
    y_clean[n_steps] = (measure_hyperbolic(state) if cfg.plant_class == HYPERBOLIC
                        else measure_parabolic(state))
    plant_time = time.perf_counter() - tic

    noise = NoiseModel(cfg.sigma2, cfg.seed, cfg.noise_as_std)
    y_noisy = noise.add_array(y_clean)

    # MHE pass
    tic = time.perf_counter()
    mhe_profiles = np.empty((n_blocks + 1, grid.n_points))
    est_time = 0.0
    n_est = 0
    if cfg.plant_class == HYPERBOLIC:
        ctx = mhe.HyperbolicMheContext(pipe.k, pipe.l, pipe.theta, dt)
        pre = Profile.constant(grid, cfg.uhat0)
        for m in range(n_steps + 1):
            t = times_all[m]
            ctx.update(t, y_noisy[m], u_values[m])
            if m % stride == 0:
                b = m // stride
                if t >= engagement - 1e-12:
                    t0 = time.perf_counter()
                    mhe_profiles[b] = ctx.estimate(t).values
                    est_time += time.perf_counter() - t0
                    n_est += 1
                else:
                    mhe_profiles[b] = pre.values
    else:
        ctx = mhe.ParabolicMheContext(
            pipe.k, pipe.l, cfg.horizon, cfg.truncation, dt, cfg.uhat0,
            snapshot_stride=stride, coeffs=pipe.coeffs,
        )
        warm_steps = int(round(cfg.horizon / dt))
        for m in range(n_steps + 1):
            t = times_all[m]
            ctx.update(t, y_noisy[m], u_values[m])
            if m % stride == 0:
                b = m // stride
                if m < warm_steps:
                    mhe_profiles[b] = ctx.record_warmup(t).values
                else:
                    t0 = time.perf_counter()
                    mhe_profiles[b] = ctx.estimate(t).values
                    est_time += time.perf_counter() - t0
                    n_est += 1
    mhe_time = time.perf_counter() - tic

    # observer pass
    observer_profiles = None
    obs_time = 0.0
    if with_observer:
        tic = time.perf_counter()
        observer_profiles = run_observer_pass(
            pipe, y_noisy, u_values, stride, cfg.uhat0)
        obs_time = time.perf_counter() - tic

    timings = {
        "backend": backend_name(),
        "kernel_solve": pipe.kernel_time,
        "plant_sim": plant_time,
        "mhe_total": mhe_time,
        "mhe_per_estimate": est_time / max(n_est, 1),
        "observer_sim": obs_time,
    }
    summary = RunSummary(
        cfg=cfg,
        times=rec_times,
        plant_profiles=plant_profiles,
        mhe_profiles=mhe_profiles,
        observer_profiles=observer_profiles,
        y_clean=y_clean,
        y_noisy=y_noisy,
        u_values=u_values,
        engagement_time=engagement,
        timings=timings,
    )
    if out_dir is not None:
        write_reports(summary, out_dir)
    return summary


def run_observer_pass(
    pipe: Pipeline,
    y_in: np.ndarray,
    u_values: np.ndarray,
    stride: int,
    uhat0: float,
) -> np.ndarray:
    """Integrate the observer PDE over a prerecorded (Y, U) signal pair."""
    grid = pipe.grid
    cfg = pipe.cfg
    n_steps = len(y_in) - 1
    n_blocks = n_steps // stride
    obs = ObserverState(Profile.constant(grid, uhat0), pipe.gain, pipe.coeffs)
    out = np.empty((n_blocks + 1, grid.n_points))
    for b in range(n_blocks):
        m0 = b * stride
        out[b] = obs.profile.values
        obs.step_many(y_in[m0:m0 + stride], u_values[m0 + 1:m0 + stride + 1], cfg.dt)
    out[n_blocks] = obs.profile.values
    return out


# --- reports -----------------------------------------------------------------


def _write_profile_csv(path, times, x, profiles, name):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"t,x,{name}\n")
        for ti, row in zip(times, profiles):
            for xi, v in zip(x, row):
                fh.write(f"{ti:.17g},{xi:.17g},{v:.17g}\n")


def _write_series_csv(path, times, values, name):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"t,{name}\n")
        for ti, v in zip(times, values):
            fh.write(f"{ti:.17g},{v:.17g}\n")


def write_reports(summary: RunSummary, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    x = summary.grid.x
    _write_profile_csv(os.path.join(out_dir, "plant.csv"),
                       summary.times, x, summary.plant_profiles, "u")
    _write_profile_csv(os.path.join(out_dir, "estimate.csv"),
                       summary.times, x, summary.mhe_profiles, "u_hat")
    _write_series_csv(os.path.join(out_dir, "error.csv"),
                      summary.times, summary.error_series("mhe"), "error_norm")
    if summary.observer_profiles is not None:
        _write_profile_csv(os.path.join(out_dir, "observer.csv"),
                           summary.times, x, summary.observer_profiles, "u_hat")
        _write_series_csv(os.path.join(out_dir, "observer_error.csv"),
                          summary.times, summary.error_series("observer"),
                          "error_norm")
    report = {
        "engagement_time": summary.engagement_time,
        "final_error": summary.final_error,
        "decay_slope": summary.decay_slope(),
        "contraction_ratios": summary.contraction_ratios(),
        "timings": summary.timings,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return report


# --- MHE vs observer comparison ----------------------------------------------


def _mhe_vs_observer_once(cfg: ScenarioConfig) -> dict:
    """One resolution level: sup over post-engagement record times of the
    L2 distance between the explicit MHE and the integrated observer PDE,
    both driven by the same noisy record.

    For the parabolic class the MHE snapshots over the first window are
    seeded from the observer trajectory, so both estimators share identical
    warm-up data and the reported discrepancy isolates the estimator
    formulas themselves.
    """
    pipe = build_pipeline(cfg)
    grid = pipe.grid
    dt = cfg.dt
    stride = cfg.output_stride
    n_steps = int(round(cfg.total_time / dt))
    n_blocks = n_steps // stride
    n_steps = n_blocks * stride
    times_all = np.arange(n_steps + 1) * dt
    u_values = np.asarray(cfg.input_fn(times_all), dtype=np.float64)
    rec_times = times_all[::stride]

    if cfg.plant_class == HYPERBOLIC:
        state = HyperbolicPlantState(cfg.u0_profile(), pipe.coeffs)
    else:
        state = ParabolicPlantState(cfg.u0_profile(), pipe.coeffs)
    y_clean = np.empty(n_steps + 1)
    for b in range(n_blocks):
        m0 = b * stride
        y_clean[m0:m0 + stride] = state.step_many(u_values[m0 + 1:m0 + stride + 1], dt)
    y_clean[n_steps] = (measure_hyperbolic(state) if cfg.plant_class == HYPERBOLIC
                        else measure_parabolic(state))
    y_noisy = NoiseModel(cfg.sigma2, cfg.seed, cfg.noise_as_std).add_array(y_clean)

    obs_profiles = run_observer_pass(pipe, y_noisy, u_values, stride, cfg.uhat0)

    engagement = (cfg.horizon if cfg.plant_class == PARABOLIC
                  else mhe.HyperbolicMheContext.HORIZON)
    sup = 0.0
    if cfg.plant_class == HYPERBOLIC:
        ctx = mhe.HyperbolicMheContext(pipe.k, pipe.l, pipe.theta, dt)
        for m in range(n_steps + 1):
            t = times_all[m]
            ctx.update(t, y_noisy[m], u_values[m])
            if m % stride == 0 and t >= engagement - 1e-12:
                est = ctx.estimate(t).values
                d = est - obs_profiles[m // stride]
                sup = max(sup, l2_norm(Profile(grid, d)))
    else:
        ctx = mhe.ParabolicMheContext(
            pipe.k, pipe.l, cfg.horizon, cfg.truncation, dt, cfg.uhat0,
            snapshot_stride=stride, coeffs=pipe.coeffs,
        )
        warm_steps = int(round(cfg.horizon / dt))
        for m in range(n_steps + 1):
            t = times_all[m]
            ctx.update(t, y_noisy[m], u_values[m])
            if m % stride == 0:
                b = m // stride
                if m < warm_steps:
                    w = mhe.inverse_transform_parabolic(
                        Profile(grid, obs_profiles[b]), pipe.l)
                    ctx.push_snapshot(t, w)
                else:
                    est = ctx.estimate(t).values
                    d = est - obs_profiles[b]
                    sup = max(sup, l2_norm(Profile(grid, d)))

    scale = float(np.max(np.abs(obs_profiles)))
    return {
        "dx": grid.dx,
        "dt": dt,
        "sup_discrepancy": float(sup),
        "observer_scale": scale,
        "times": rec_times,
    }


def compare_mhe_vs_observer(cfg: ScenarioConfig, levels: int = 2) -> dict:
    """Run the MHE/observer equivalence study across grid refinements.

    Returns per-level sup discrepancies and the refinement ratios
    sup(level j) / sup(level j+1); a ratio above 1 means the discrepancy
    shrinks under refinement, consistent with two discretizations of the
    same continuum estimator.
    """
    results = []
    current = cfg
    for _ in range(levels):
        results.append(_mhe_vs_observer_once(current))
        current = current.refined(2)
    ratios = [
        results[j]["sup_discrepancy"] / results[j + 1]["sup_discrepancy"]
        if results[j + 1]["sup_discrepancy"] > 0.0 else math.inf
        for j in range(levels - 1)
    ]
    return {
        "plant_class": cfg.plant_class,
        "levels": [
            {k: v for k, v in r.items() if k != "times"} for r in results
        ],
        "refinement_ratios": ratios,
    }


# --- contraction check -------------------------------------------------------


def check_contraction(cfg: ScenarioConfig, windows: int = 4) -> dict:
    """Measure per-window error contraction and compare against the
    theoretical factor M exp(-pi^2 T) for the parabolic class."""
    if cfg.plant_class != PARABOLIC:
        raise ValueError("contraction check applies to the parabolic class")
    summary = run_scenario(cfg)
    ratios = summary.contraction_ratios()[:windows]
    coeffs = cfg.coefficient_set()
    lam_bar = coeffs.lam_bar(cfg.n_points)
    m_over = mhe.parabolic_overshoot(lam_bar)
    bound = m_over * math.exp(-math.pi ** 2 * cfg.horizon)
    return {
        "ratios": ratios,
        "theoretical_factor": bound,
        "overshoot": m_over,
        "horizon": cfg.horizon,
        "contracting": bound < 1.0,
        "all_below_bound": all(r <= bound for r in ratios),
        "decay_slope": summary.decay_slope(),
    }


# --- cost benchmark ----------------------------------------------------------


def benchmark_cost(cfg: ScenarioConfig, repeat: int = 3) -> dict:
    """Wall-clock cost of one MHE estimate versus integrating the observer
    PDE across one horizon; the MHE cost is independent of elapsed time."""
    pipe = build_pipeline(cfg)
    summary = run_scenario(cfg, pipeline=pipe)
    grid = pipe.grid
    dt = cfg.dt
    n_win = int(round((cfg.horizon if cfg.plant_class == PARABOLIC else 1.0) / dt))
    obs = ObserverState(Profile.constant(grid, cfg.uhat0), pipe.gain, pipe.coeffs)
    ys = summary.y_noisy[:n_win]
    us = summary.u_values[1:n_win + 1]
    best_obs = math.inf
    for _ in range(repeat):
        tic = time.perf_counter()
        obs.step_many(ys, us, dt)
        best_obs = min(best_obs, time.perf_counter() - tic)
    return {
        "backend": backend_name(),
        "mhe_per_estimate": summary.timings["mhe_per_estimate"],
        "observer_per_horizon": best_obs,
        "speedup": best_obs / max(summary.timings["mhe_per_estimate"], 1e-12),
    }

"""Acceptance gate: one test per headline requirement, run with -v to get a
per-requirement pass/fail line. Tolerances and runtime limits are asserted
exactly as stated; no requirement is weakened to force a pass."""

import filecmp
import math
import time

import numpy as np
import pytest

from pdemhe import config as cfgmod
from pdemhe import harness, kernels, mhe
from pdemhe.core import Grid, Profile, l2_norm
from conftest import parabolic_kernel_closed_form


def timed(limit):
    """Context manager asserting wall-clock runtime stays under limit."""

    class _Timer:
        def __enter__(self):
            self.tic = time.perf_counter()
            return self

        def __exit__(self, *exc):
            if exc[0] is None:
                elapsed = time.perf_counter() - self.tic
                assert elapsed < limit, (
                    f"runtime {elapsed:.1f} s exceeds limit {limit} s")
            return False

    return _Timer()


def test_01_parabolic_kernel_matches_bessel_closed_form(lam5_coeffs):
    with timed(10.0):
        g = Grid(201)
        k = kernels.solve_parabolic_kernel(lam5_coeffs, g)
        ii, jj = np.tril_indices(g.n_points)
        exact = parabolic_kernel_closed_form(5.0, g.x[ii], g.x[jj])
        assert np.max(np.abs(k.values[ii, jj] - exact)) < 1e-4
        # boundary data: k(x, 0) = 0 exactly, diagonal matches the
        # half-step trapezoid of -lambda/2 (exact for constant lambda)
        assert np.all(k.values[:, 0] == 0.0)
        diag = np.diag(k.values)
        assert np.max(np.abs(diag + 2.5 * g.x)) < 1e-12


def test_02a_hyperbolic_direct_kernel_bound(hyp_coeffs, hyp_kernel_201):
    with timed(30.0):
        k, _ = hyp_kernel_201
        g = k.grid
        xx = g.x[:, None]
        yy = g.x[None, :]
        m_f = 1.0
        bound = kernels.hyperbolic_kernel_bound(m_f, xx, yy)
        mask = np.tril(np.ones_like(k.values, dtype=bool))
        assert np.all(np.abs(k.values[mask]) <= bound[mask] + 1e-8)


def test_02b_inverse_and_parabolic_kernel_bounds(hyp_kernel_201, cheb_coeffs):
    with timed(30.0):
        k, l = hyp_kernel_201
        k_bar = k.max_abs()
        assert l.max_abs() <= kernels.inverse_bound_from_kbar(k_bar) + 1e-8
        assert l.max_abs() <= kernels.hyperbolic_inverse_bound(1.0) + 1e-8

        g = Grid(201)
        kp = kernels.solve_parabolic_kernel(cheb_coeffs, g)
        lp = kernels.invert_kernel(kp)
        lam_bar = 21.0
        bound = kernels.parabolic_kernel_bound(lam_bar, g.x[:, None])
        mask = np.tril(np.ones_like(kp.values, dtype=bool))
        assert np.all(
            np.abs(kp.values) * mask <= (bound * np.ones_like(kp.values) + 1e-8))
        assert lp.max_abs() <= kernels.parabolic_inverse_bound(lam_bar) + 1e-8


def test_03_hyperbolic_finite_time_convergence():
    with timed(60.0):
        cfg = cfgmod.load("hyperbolic-desk")
        assert cfg.n_points == 201 and cfg.dt == cfg.grid.dx
        assert cfg.sigma2 == 0.0 and cfg.uhat0 == 0.0
        summary = harness.run_scenario(cfg, with_observer=True)
        dx = cfg.grid.dx
        e0 = l2_norm(Profile(cfg.grid,
                             cfg.u0_profile().values - cfg.uhat0))
        sel = (summary.times >= 1.0 + 2 * dx - 1e-12) & (summary.times <= 2.0)
        for which in ("mhe", "observer"):
            errs = summary.error_series(which)[sel]
            assert np.max(errs) <= 10.0 * dx * e0, which


def test_04_mhe_observer_equivalence_under_refinement():
    with timed(300.0):
        for preset in ("hyperbolic-equiv", "parabolic-equiv"):
            cfg = cfgmod.load(preset)
            report = harness.compare_mhe_vs_observer(cfg, levels=2)
            assert report["refinement_ratios"][0] >= 1.5, preset
            fine = cfg.refined(2)
            plant_max = float(np.max(
                harness.run_scenario(fine).plant_norms()))
            sup = report["levels"][1]["sup_discrepancy"]
            assert sup <= 0.05 * plant_max, preset


def test_05_parabolic_exponential_envelope():
    with timed(60.0):
        cfg = cfgmod.load("parabolic-envelope")
        report = harness.check_contraction(cfg)
        assert report["decay_slope"] <= -math.pi**2 * 0.9
        assert report["contracting"]
        assert report["all_below_bound"]


def test_06a_desk_scale_noisy_error_drop_at_engagement():
    with timed(180.0):
        cfg = cfgmod.load("fig1-desk")
        summary = harness.run_scenario(cfg)
        t = summary.times
        errs = summary.error_series("mhe")
        pre = errs[t < cfg.horizon - 1e-12][-1]
        window = errs[(t > cfg.horizon) & (t <= cfg.horizon + 0.05)]
        assert np.min(window) <= pre / 5.0


def test_06b_desk_scale_noiseless_error_floor():
    with timed(180.0):
        cfg = cfgmod.load("fig1-desk-noiseless")
        summary = harness.run_scenario(cfg)
        t = summary.times
        errs = summary.error_series("mhe")
        pre = errs[t < cfg.horizon - 1e-12][-1]
        at_03 = errs[np.argmin(np.abs(t - 0.3))]
        assert at_03 < 0.01 * pre


def test_07_window_recursion_fidelity_over_long_runs(lam5_coeffs):
    g = Grid(51)
    k = kernels.solve_parabolic_kernel(lam5_coeffs, g)
    l = kernels.invert_kernel(k)
    dt = 2.5e-5
    ctx = mhe.ParabolicMheContext(k, l, 0.1, 4, dt, 0.0,
                                  snapshot_stride=1, coeffs=lam5_coeffs)
    rng = np.random.default_rng(11)
    t = 0.0
    for m in range(100_001):
        t = m * dt
        ctx.update(t, float(rng.standard_normal()),
                   float(rng.standard_normal()))
    jm, ji = ctx.direct_window_integrals(t)
    assert np.max(np.abs(jm - ctx.j_meas)) < 1e-8
    assert np.max(np.abs(ji - ctx.j_input)) < 1e-8


@pytest.mark.parametrize("preset", ["hyperbolic-equiv", "parabolic-equiv"])
def test_08_byte_identical_reruns(preset, tmp_path):
    cfg = cfgmod.load(preset)
    a, b = tmp_path / "a", tmp_path / "b"
    harness.run_scenario(cfg, out_dir=str(a), with_observer=True)
    harness.run_scenario(cfg, out_dir=str(b), with_observer=True)
    for name in ("plant.csv", "estimate.csv", "error.csv",
                 "observer.csv", "observer_error.csv"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name

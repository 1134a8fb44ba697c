import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdemhe import coeffs as cf
from pdemhe import kernels, mhe
from pdemhe.core import Grid, OutOfWindowError, Profile, l2_norm
from pdemhe.plant import HyperbolicPlantState, ParabolicPlantState, measure_hyperbolic, measure_parabolic


# --- backstepping transforms -------------------------------------------------


def test_hyperbolic_transform_round_trip(hyp_kernel_201):
    k, l = hyp_kernel_201
    g = k.grid
    rng = np.random.default_rng(0)
    u = Profile(g, rng.standard_normal(g.n_points))
    w = mhe.inverse_transform_hyperbolic(u, l)
    back = mhe.forward_transform_hyperbolic(w, k)
    assert np.max(np.abs(back.values - u.values)) < 5e-4


def test_parabolic_transform_round_trip(par_kernel_201):
    k, l = par_kernel_201
    g = k.grid
    rng = np.random.default_rng(1)
    u = Profile(g, rng.standard_normal(g.n_points))
    w = mhe.inverse_transform_parabolic(u, l)
    back = mhe.forward_transform_parabolic(w, k)
    assert np.max(np.abs(back.values - u.values)) < 5e-4


# --- hyperbolic MHE ----------------------------------------------------------


class TestHyperbolicMhe:
    def test_delayed_input_identity(self):
        """With f = 0 and g = 0 the gain kernel vanishes and the estimate
        must reduce to the transported boundary input U(t+x-1)."""
        cs = cf.hyperbolic_coeffs(cf.constant2d(0.0), cf.constant(0.0))
        g = Grid(101)
        k = kernels.solve_hyperbolic_kernel(cs, g)
        l = kernels.invert_kernel(k)
        p1 = kernels.observer_gain_hyperbolic(cs, k)
        th = kernels.theta_kernel(p1, l)
        dt = g.dx
        ctx = mhe.HyperbolicMheContext(k, l, th, dt)
        U = lambda t: 2.0 * np.cos(2.0 * t)
        steps = round(1.6 / dt)
        for m in range(steps + 1):
            ctx.update(m * dt, 0.0, float(U(m * dt)))
        t = steps * dt
        est = ctx.estimate(t)
        assert np.max(np.abs(est.values - U(t + g.x - 1.0))) < 1e-12

    def test_estimate_before_engagement_raises(self, hyp_coeffs, hyp_kernel_201):
        k, l = hyp_kernel_201
        p1 = kernels.observer_gain_hyperbolic(hyp_coeffs, k)
        th = kernels.theta_kernel(p1, l)
        ctx = mhe.HyperbolicMheContext(k, l, th, k.grid.dx)
        ctx.update(0.0, 1.0, 1.0)
        with pytest.raises(OutOfWindowError):
            ctx.estimate(0.5)

    def test_tracks_plant(self, hyp_coeffs, hyp_kernel_201):
        k, l = hyp_kernel_201
        g = k.grid
        p1 = kernels.observer_gain_hyperbolic(hyp_coeffs, k)
        th = kernels.theta_kernel(p1, l)
        dt = g.dx
        U = lambda t: 2.0 * np.sin(2.0 * t)
        plant = HyperbolicPlantState(
            Profile(g, 10.0 * g.x * (1.0 - g.x)), hyp_coeffs)
        ctx = mhe.HyperbolicMheContext(k, l, th, dt)
        steps = round(2.0 / dt)
        for m in range(steps + 1):
            t = m * dt
            ctx.update(t, measure_hyperbolic(plant), float(U(t)))
            if m < steps:
                plant.step(float(U((m + 1) * dt)), dt)
        err = l2_norm(Profile(g, plant.profile.values - ctx.estimate(2.0).values))
        assert err < 10.0 * g.dx * l2_norm(Profile(g, 10.0 * g.x * (1.0 - g.x)))


# --- parabolic window recursions --------------------------------------------


def make_parabolic_ctx(n=51, lam=5.0, horizon=0.2, n_modes=4, dt=1e-4,
                       uhat0=0.0, stride=1):
    cs = cf.parabolic_coeffs(cf.constant(lam))
    g = Grid(n)
    k = kernels.solve_parabolic_kernel(cs, g)
    l = kernels.invert_kernel(k)
    return mhe.ParabolicMheContext(k, l, horizon, n_modes, dt, uhat0,
                                   snapshot_stride=stride, coeffs=cs)


class TestWindowRecursion:
    def test_zero_signals_stay_zero(self):
        ctx = make_parabolic_ctx()
        for m in range(5000):
            ctx.update(m * ctx.dt, 0.0, 0.0)
        assert np.all(ctx.j_meas == 0.0)
        assert np.all(ctx.j_input == 0.0)

    def test_constant_signal_closed_form(self):
        """For s = 1 the window integral converges to (1-e^{-aT})/a."""
        ctx = make_parabolic_ctx(horizon=0.2, dt=1e-4)
        k11 = ctx.k11
        for m in range(4000):
            ctx.update(m * ctx.dt, 1.0 + k11, 1.0)  # Y - k11 U = 1, U = 1
        a = (np.arange(1, 5) * np.pi) ** 2
        exact = (1.0 - np.exp(-a * 0.2)) / a
        assert np.max(np.abs(ctx.j_meas - exact)) < 1e-6
        assert np.max(np.abs(ctx.j_input - exact)) < 1e-6

    def test_matches_direct_quadrature(self):
        ctx = make_parabolic_ctx()
        rng = np.random.default_rng(9)
        t = 0.0
        for m in range(6000):
            t = m * ctx.dt
            ctx.update(t, float(rng.standard_normal()),
                       float(rng.standard_normal()))
        jm, ji = ctx.direct_window_integrals(t)
        assert np.max(np.abs(jm - ctx.j_meas)) < 1e-10
        assert np.max(np.abs(ji - ctx.j_input)) < 1e-10

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=10, deadline=None)
    def test_matches_direct_quadrature_property(self, seed):
        ctx = make_parabolic_ctx(n=21, dt=1e-3, horizon=0.1)
        rng = np.random.default_rng(seed)
        scale = 10.0 ** rng.integers(-3, 4)
        t = 0.0
        for m in range(500):
            t = m * ctx.dt
            ctx.update(t, scale * float(rng.standard_normal()),
                       scale * float(rng.standard_normal()))
        jm, ji = ctx.direct_window_integrals(t)
        tol = 1e-10 * max(1.0, scale)
        assert np.max(np.abs(jm - ctx.j_meas)) < tol
        assert np.max(np.abs(ji - ctx.j_input)) < tol


class TestParabolicMhe:
    def test_pure_eigen_decay_of_snapshot(self):
        """lambda = 0 (both kernels vanish), no signals: the estimate is the
        snapshot propagated by the heat semigroup over one horizon."""
        ctx = make_parabolic_ctx(n=101, lam=0.0, horizon=0.1, n_modes=4,
                                 dt=2.5e-5, stride=1)
        g = ctx.grid
        phi1 = Profile(g, np.sqrt(2.0) * np.sin(np.pi * g.x))
        ctx.push_snapshot(0.0, phi1)
        steps = round(0.1 / ctx.dt)
        for m in range(steps + 1):
            ctx.update(m * ctx.dt, 0.0, 0.0)
        est = ctx.estimate(0.1)
        expect = np.exp(-np.pi**2 * 0.1) * phi1.values
        assert np.max(np.abs(est.values - expect)) < 1e-10

    def test_steady_state_boundary_forcing(self):
        """lambda = 0, constant U, empty snapshot: the series converges to
        the steady heat profile U x as the mode count grows."""
        errs = []
        for n_modes in (4, 16, 64):
            # dt must resolve the fastest retained mode rate (64 pi)^2
            ctx = make_parabolic_ctx(n=401, lam=0.0, horizon=0.1,
                                     n_modes=n_modes, dt=2e-6, stride=1)
            g = ctx.grid
            ctx.push_snapshot(0.0, Profile(g, 3.0 * g.x))
            steps = round(0.1 / ctx.dt)
            for m in range(steps + 1):
                # the steady sensor reading is u_x(0) = U
                ctx.update(m * ctx.dt, 3.0, 3.0)
            est = ctx.estimate(0.1)
            errs.append(l2_norm(Profile(g, est.values - 3.0 * g.x)))
        assert errs[0] > errs[1] > errs[2]
        # sine-series truncation of the ramp decays like 1/sqrt(N)
        assert errs[2] < 0.2
        assert errs[0] / errs[2] > 3.0

    def test_tracks_plant_unforced(self, lam5_coeffs):
        g = Grid(101)
        k = kernels.solve_parabolic_kernel(lam5_coeffs, g)
        l = kernels.invert_kernel(k)
        dt = 2.5e-5
        stride = 400
        T = 0.2
        ctx = mhe.ParabolicMheContext(k, l, T, 16, dt, 0.0,
                                      snapshot_stride=stride,
                                      coeffs=lam5_coeffs)
        plant = ParabolicPlantState(
            Profile(g, np.sqrt(2.0) * np.sin(np.pi * g.x)), lam5_coeffs)
        steps = round(0.6 / dt)
        warm = round(T / dt)
        errs = {}
        for m in range(steps + 1):
            t = m * dt
            ctx.update(t, measure_parabolic(plant), 0.0)
            if m % stride == 0:
                if m < warm:
                    ctx.record_warmup(t)
                else:
                    e = l2_norm(Profile(
                        g, plant.profile.values - ctx.estimate(t).values))
                    errs[round(t, 6)] = e
            if m < steps:
                plant.step(0.0, dt)
        # each extra horizon contracts the error by about e^{-pi^2 T} = 0.139
        assert errs[0.4] < 0.4 * errs[0.2]
        assert errs[0.6] < 0.4 * errs[0.4]

    def test_estimate_during_warmup_raises(self):
        ctx = make_parabolic_ctx()
        ctx.update(0.0, 1.0, 0.0)
        with pytest.raises(OutOfWindowError):
            ctx.estimate(0.2)

    def test_checkpoint_round_trip_bit_identical(self, tmp_path):
        ctx = make_parabolic_ctx(stride=50)
        rng = np.random.default_rng(3)
        t = 0.0
        warm = round(ctx.horizon / ctx.dt)
        for m in range(3000):
            t = m * ctx.dt
            ctx.update(t, float(rng.standard_normal()),
                       float(rng.standard_normal()))
            if m % 50 == 0:
                if m < warm:
                    ctx.record_warmup(t)
                else:
                    ctx.estimate(t)
        path = tmp_path / "ctx.txt"
        ctx.save(path)
        clone = mhe.ParabolicMheContext.load(path)
        for m in range(3000, 3400):
            t = m * ctx.dt
            y = float(rng.standard_normal())
            u = float(rng.standard_normal())
            ctx.update(t, y, u)
            clone.update(t, y, u)
            if m % 50 == 0:
                a = ctx.estimate(t)
                b = clone.estimate(t)
                assert np.array_equal(a.values, b.values)

    def test_estimate_depends_only_on_window(self):
        """Two contexts whose histories agree over the last horizon and
        share the t-T snapshot give bit-identical estimates, regardless of
        the data seen before the window."""
        rng = np.random.default_rng(8)
        ys = rng.standard_normal(6001)
        us = rng.standard_normal(6001)
        dt = 1e-4
        w = round(0.2 / dt)
        long_ctx = make_parabolic_ctx(stride=w)
        short_ctx = make_parabolic_ctx(stride=w)
        snap = Profile(long_ctx.grid,
                       np.sin(np.pi * long_ctx.grid.x))
        for m in range(6001):
            long_ctx.update(m * dt, float(ys[m]), float(us[m]))
        t_end = 6000 * dt
        start = 6000 - w
        for m in range(start, 6001):
            short_ctx.update(m * dt, float(ys[m]), float(us[m]))
        long_ctx.push_snapshot(t_end - 0.2, snap)
        short_ctx.push_snapshot(t_end - 0.2, snap)
        # resynchronize the long context's recursions to kill accumulated
        # roundoff so the comparison isolates window content
        jm, ji = long_ctx.direct_window_integrals(t_end)
        long_ctx.j_meas, long_ctx.j_input = jm, ji
        jm2, ji2 = short_ctx.direct_window_integrals(t_end)
        short_ctx.j_meas, short_ctx.j_input = jm2, ji2
        a = long_ctx.estimate(t_end)
        b = short_ctx.estimate(t_end)
        assert np.array_equal(a.values, b.values)


def test_contraction_threshold_monotone():
    mild = mhe.contraction_threshold(cf.parabolic_coeffs(cf.constant(0.1)))
    hot = mhe.contraction_threshold(cf.parabolic_coeffs(cf.constant(1.0)))
    assert 0.0 < mild < hot
    # with T above the threshold a window strictly contracts
    assert mhe.parabolic_overshoot(0.1) * np.exp(-np.pi**2 * (mild + 0.01)) < 1.0

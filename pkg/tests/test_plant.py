import numpy as np
import pytest

from pdemhe import coeffs as cf
from pdemhe.core import ConfigError, Grid, Profile, l2_norm
from pdemhe.plant import (
    HyperbolicPlantState,
    NoiseModel,
    ParabolicPlantState,
    check_compatibility,
    measure_hyperbolic,
    measure_parabolic,
    parabolic_dt_bound,
)
from pdemhe.stepping import neumann_right


def test_neumann_stencil_exact_for_quadratics():
    g = Grid(101)
    u = 2.0 * g.x**2 - 3.0 * g.x + 1.0
    assert neumann_right(u, g.dx) == pytest.approx(4.0 - 3.0, abs=1e-10)


class TestHyperbolicPlant:
    def test_pure_transport_exact_at_unit_cfl(self):
        """With f = 0, g = 0 and dt = dx the upwind step is an exact shift,
        so u(x,t) = U(t+x-1)."""
        cs = cf.hyperbolic_coeffs(cf.constant2d(0.0), cf.constant(0.0))
        g = Grid(101)
        dt = g.dx
        U = lambda t: np.sin(3.0 * t)
        st = HyperbolicPlantState(Profile(g, U(g.x - 1.0)), cs)
        steps = 150
        for m in range(steps):
            st.step(float(U((m + 1) * dt)), dt)
        t = steps * dt
        assert np.max(np.abs(st.profile.values - U(t + g.x - 1.0))) < 1e-12

    def test_measurement_is_left_endpoint(self):
        cs = cf.hyperbolic_coeffs(cf.constant2d(0.0), cf.constant(0.0))
        g = Grid(51)
        st = HyperbolicPlantState(Profile(g, g.x + 2.0), cs)
        assert measure_hyperbolic(st) == 2.0

    def test_cfl_violation_raises(self):
        cs = cf.hyperbolic_coeffs(cf.constant2d(1.0), cf.constant(0.0))
        g = Grid(51)
        st = HyperbolicPlantState(Profile.zeros(g), cs)
        with pytest.raises(ConfigError):
            st.step(0.0, 2.0 * g.dx)

    def test_step_many_matches_single_steps(self):
        cs = cf.hyperbolic_coeffs(cf.constant2d(1.0), cf.polynomial(0.0, 1.0))
        g = Grid(81)
        u0 = Profile(g, np.sin(2.0 * np.pi * g.x))
        a = HyperbolicPlantState(u0, cs)
        b = HyperbolicPlantState(u0, cs)
        dt = g.dx
        bc = np.linspace(0.3, 0.9, 20)
        ys = a.step_many(bc, dt)
        for v in bc:
            b.step(float(v), dt)
        assert np.array_equal(a.profile.values, b.profile.values)
        assert len(ys) == 20


class TestParabolicPlant:
    def test_heat_eigenmode_decay(self):
        """lambda = 0, U = 0: the first sine mode decays at rate pi^2."""
        cs = cf.parabolic_coeffs(cf.constant(0.0))
        g = Grid(101)
        st = ParabolicPlantState(
            Profile(g, np.sqrt(2.0) * np.sin(np.pi * g.x)), cs)
        dt = 2.5e-5
        t_end = 0.1
        for _ in range(int(round(t_end / dt))):
            st.step(0.0, dt)
        decay = l2_norm(st.profile)
        assert decay == pytest.approx(np.exp(-np.pi**2 * t_end), rel=2e-3)

    def test_reaction_shifts_decay_rate(self):
        """Constant lambda shifts every eigenvalue by lambda exactly."""
        lam = 4.0
        cs = cf.parabolic_coeffs(cf.constant(lam))
        g = Grid(101)
        st = ParabolicPlantState(
            Profile(g, np.sqrt(2.0) * np.sin(np.pi * g.x)), cs)
        dt = 2e-5
        t_end = 0.1
        for _ in range(int(round(t_end / dt))):
            st.step(0.0, dt)
        assert l2_norm(st.profile) == pytest.approx(
            np.exp((lam - np.pi**2) * t_end), rel=2e-3)

    def test_steady_state_is_linear_profile(self):
        cs = cf.parabolic_coeffs(cf.constant(0.0))
        g = Grid(51)
        st = ParabolicPlantState(Profile.zeros(g), cs)
        dt = parabolic_dt_bound(g.dx, 0.0)
        for _ in range(int(round(2.0 / dt))):
            st.step(3.0, dt)
        assert np.max(np.abs(st.profile.values - 3.0 * g.x)) < 1e-8
        assert measure_parabolic(st) == pytest.approx(3.0, abs=1e-7)

    def test_maximum_principle(self):
        """lambda <= 0 and nonnegative data keep the state within bounds."""
        cs = cf.parabolic_coeffs(cf.constant(-1.0))
        g = Grid(51)
        rng = np.random.default_rng(5)
        u0 = rng.uniform(0.0, 1.0, g.n_points)
        u0[0] = 0.0
        u0[-1] = 0.5
        st = ParabolicPlantState(Profile(g, u0), cs)
        dt = 0.5 * parabolic_dt_bound(g.dx, 1.0)
        for _ in range(2000):
            st.step(0.5, dt)
            assert np.all(st.profile.values >= -1e-12)
            assert np.all(st.profile.values <= 1.0 + 1e-12)

    def test_stability_violation_raises(self):
        cs = cf.parabolic_coeffs(cf.constant(0.0))
        g = Grid(51)
        st = ParabolicPlantState(Profile.zeros(g), cs)
        with pytest.raises(ConfigError):
            st.step(0.0, g.dx**2)


class TestNoise:
    def test_zero_variance_is_identity(self):
        nm = NoiseModel(0.0, 123)
        y = np.linspace(-1, 1, 10)
        assert np.array_equal(nm.add_array(y), y)

    def test_deterministic_under_seed(self):
        a = NoiseModel(500.0, 42).add_array(np.zeros(1000))
        b = NoiseModel(500.0, 42).add_array(np.zeros(1000))
        assert np.array_equal(a, b)
        c = NoiseModel(500.0, 43).add_array(np.zeros(1000))
        assert not np.array_equal(a, c)

    def test_variance_interpretation(self):
        n = 200_000
        samples = NoiseModel(500.0, 0).add_array(np.zeros(n))
        # sample variance of N(0, sigma^2 = 500); std of the estimate ~ 1.6
        assert samples.var() == pytest.approx(500.0, rel=0.02)
        samples_std = NoiseModel(500.0, 0, interpret_as_std=True).add_array(
            np.zeros(n))
        assert samples_std.var() == pytest.approx(500.0**2, rel=0.02)

    def test_negative_variance_rejected(self):
        with pytest.raises(ConfigError):
            NoiseModel(-1.0, 0)


def test_compatibility_warning():
    g = Grid(51)
    with pytest.warns(UserWarning):
        check_compatibility(Profile.constant(g, 1.0), 5.0, "hyperbolic")
    with pytest.warns(UserWarning):
        check_compatibility(Profile.constant(g, 0.5), 0.5, "parabolic")

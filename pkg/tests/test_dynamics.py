"""Integrator oracles: hand-expanded stencils, step-halving order checks,
conservation laws, and the linearized growth rate of the PDE."""

import numpy as np
import pytest

from sdeim.dynamics import (
    KS,
    LORENZ96,
    SystemConfig,
    TrajectoryMatrix,
    integrate,
    integrate_ks,
    integrate_lorenz96,
    lorenz96_rhs,
    random_initial_condition,
)
from sdeim.errors import InvalidInputError, NumericalConsistencyError


def lorenz_cfg(n=40, dt_internal=0.01, dt_sample=0.25, forcing=4.0):
    return SystemConfig(LORENZ96, n, dt_internal, dt_sample, forcing=forcing)


def ks_cfg(n=128, dt_internal=0.05, dt_sample=0.2, length=22.0):
    return SystemConfig(KS, n, dt_internal, dt_sample, domain_length=length)


class TestLorenz96Rhs:
    def test_uniform_forcing_state_is_equilibrium(self):
        for n in (4, 7, 40):
            u = np.full(n, 4.0)
            assert np.allclose(lorenz96_rhs(u, 4.0), 0.0)

    def test_zero_state_leaves_only_forcing(self):
        assert np.array_equal(lorenz96_rhs(np.zeros(6), 4.0), np.full(6, 4.0))

    def test_hand_expanded_stencil(self):
        # u = (1, 2, 3, 4), F = 0, expanded component by component with
        # cyclic wrapping:
        #   i=0: -1 + (2 - 3) * 4 = -5
        #   i=1: -2 + (3 - 4) * 1 = -3
        #   i=2: -3 + (4 - 1) * 2 =  3
        #   i=3: -4 + (1 - 2) * 3 = -7
        got = lorenz96_rhs(np.array([1.0, 2.0, 3.0, 4.0]), 0.0)
        assert np.array_equal(got, np.array([-5.0, -3.0, 3.0, -7.0]))

    def test_rejects_short_states(self):
        with pytest.raises(InvalidInputError):
            lorenz96_rhs(np.ones(3), 4.0)


class TestIntegrateLorenz96:
    def test_fixed_point_is_stationary(self):
        cfg = lorenz_cfg()
        u0 = np.full(40, 4.0)
        traj = integrate_lorenz96(cfg, u0, 10.0)
        assert np.max(np.abs(traj.states - 4.0)) < 1e-10

    def test_first_column_is_initial_condition(self):
        cfg = lorenz_cfg()
        u0 = random_initial_condition(cfg, seed=1, burn_in=0.0)
        traj = integrate_lorenz96(cfg, u0, 1.0)
        assert np.array_equal(traj.states[:, 0], u0)
        assert traj.n_snapshots == 5

    def test_rk4_convergence_order(self):
        # Step-halving against a dt/8 reference over one time unit.
        u0 = random_initial_condition(lorenz_cfg(), seed=7)

        def end_state(dt):
            cfg = lorenz_cfg(dt_internal=dt, dt_sample=1.0)
            return integrate_lorenz96(cfg, u0, 1.0).states[:, -1]

        ref = end_state(0.05 / 8.0)
        err_coarse = np.linalg.norm(end_state(0.05) - ref)
        err_fine = np.linalg.norm(end_state(0.025) - ref)
        order = np.log2(err_coarse / err_fine)
        assert 3.7 <= order <= 4.3

    def test_chained_calls_match_single_run(self):
        cfg = lorenz_cfg()
        u0 = random_initial_condition(cfg, seed=3)
        whole = integrate_lorenz96(cfg, u0, 20.0)
        first = integrate_lorenz96(cfg, u0, 10.0)
        second = integrate_lorenz96(cfg, first.states[:, -1], 10.0, t0=10.0)
        glued = np.hstack([first.states, second.states[:, 1:]])
        assert np.max(np.abs(glued - whole.states)) < 1e-9

    def test_statistics_stabilize_at_benchmark_settings(self):
        # N=40, F=4, dt_sample=0.25: the attractor's global spread is
        # already converged on a 200-unit window.
        cfg = lorenz_cfg()
        u0 = random_initial_condition(cfg, seed=11)
        traj = integrate_lorenz96(cfg, u0, 400.0)
        half = traj.n_snapshots // 2
        std_first = traj.states[:, :half].std()
        std_second = traj.states[:, half:].std()
        assert abs(std_first - std_second) / std_second < 0.15


class TestIntegrateKs:
    def test_zero_initial_condition_stays_zero(self):
        traj = integrate_ks(ks_cfg(), np.zeros(128), 2.0)
        assert np.max(np.abs(traj.states)) == 0.0

    def test_spatial_mean_is_conserved(self):
        cfg = ks_cfg()
        u0 = random_initial_condition(cfg, seed=5, burn_in=0.0) + 0.37
        traj = integrate_ks(cfg, u0, 10.0)
        drift = np.abs(traj.states.mean(axis=0) - u0.mean())
        assert drift.max() < 1e-10

    def test_spatial_mean_conserved_long_run(self):
        cfg = ks_cfg()
        u0 = random_initial_condition(cfg, seed=5)
        traj = integrate_ks(cfg, u0, 100.0)
        assert abs(traj.states[:, -1].mean() - u0.mean()) < 1e-8

    def test_linear_growth_rate_of_single_mode(self):
        # A tiny single-mode field grows like exp((q^2 - q^4) t) while
        # nonlinear terms are negligible.
        cfg = ks_cfg()
        length = 22.0
        k = 2
        q = 2.0 * np.pi * k / length
        x = np.linspace(-length / 2, length / 2, 128, endpoint=False)
        u0 = 1e-6 * np.cos(q * x)
        traj = integrate_ks(cfg, u0, 1.0)
        amp0 = np.abs(np.fft.fft(traj.states[:, 0])[k])
        amp1 = np.abs(np.fft.fft(traj.states[:, -1])[k])
        rate = np.log(amp1 / amp0) / 1.0
        expected = q**2 - q**4
        assert abs(rate - expected) <= 0.02 * abs(expected)

    def test_chained_calls_match_single_run(self):
        cfg = ks_cfg()
        u0 = random_initial_condition(cfg, seed=9)
        whole = integrate_ks(cfg, u0, 20.0)
        first = integrate_ks(cfg, u0, 10.0)
        second = integrate_ks(cfg, first.states[:, -1], 10.0, t0=10.0)
        glued = np.hstack([first.states, second.states[:, 1:]])
        assert np.max(np.abs(glued - whole.states)) < 1e-9

    def test_rejects_complex_initial_condition(self):
        with pytest.raises(InvalidInputError):
            integrate_ks(ks_cfg(), np.zeros(128, dtype=complex), 1.0)

    def test_imaginary_residue_guard_fires(self):
        # A spectral state without conjugate symmetry is a bug upstream;
        # the extraction step must refuse to silently drop it.
        from sdeim.dynamics import _ks_to_real

        v = np.fft.fft(np.ones(16))
        assert np.array_equal(_ks_to_real(v, 0.0), np.ones(16))
        v[3] += 8.0j  # breaks u(x) being real
        with pytest.raises(NumericalConsistencyError):
            _ks_to_real(v, 0.0)

    def test_stepper_order_in_weak_regime(self):
        # With a small-amplitude state the stiff order reduction that
        # exponential integrators show on the attractor is absent and
        # the classical fourth order must appear cleanly.
        x = np.linspace(-11, 11, 128, endpoint=False)
        u0 = 0.01 * np.cos(2 * np.pi * x / 22) + 0.005 * np.sin(4 * np.pi * x / 22)

        def end_state(dt):
            cfg = ks_cfg(dt_internal=dt, dt_sample=1.0)
            return integrate_ks(cfg, u0, 1.0).states[:, -1]

        ref = end_state(0.1 / 16.0)
        err_coarse = np.linalg.norm(end_state(0.1) - ref)
        err_fine = np.linalg.norm(end_state(0.05) - ref)
        assert 3.6 <= np.log2(err_coarse / err_fine) <= 4.4

    def test_stepper_accuracy_on_attractor(self):
        # On the chaotic attractor the default step still resolves one
        # time unit to a few parts in a million of the state norm.
        cfg = ks_cfg()
        u0 = random_initial_condition(cfg, seed=17)
        fine = integrate_ks(ks_cfg(dt_internal=0.00625, dt_sample=1.0), u0, 1.0)
        coarse = integrate_ks(ks_cfg(dt_internal=0.05, dt_sample=1.0), u0, 1.0)
        err = np.linalg.norm(coarse.states[:, -1] - fine.states[:, -1])
        assert err < 1e-5 * np.linalg.norm(fine.states[:, -1])


class TestRandomInitialCondition:
    def test_deterministic_in_seed(self):
        cfg = lorenz_cfg()
        a = random_initial_condition(cfg, seed=42)
        b = random_initial_condition(cfg, seed=42)
        assert np.array_equal(a, b)

    def test_distinct_seeds_differ(self):
        cfg = ks_cfg()
        a = random_initial_condition(cfg, seed=1, burn_in=0.0)
        b = random_initial_condition(cfg, seed=2, burn_in=0.0)
        assert np.any(a != b)

    def test_lorenz_burned_in_state_is_bounded(self):
        cfg = lorenz_cfg()
        for seed in range(5):
            u = random_initial_condition(cfg, seed=seed, burn_in=50.0)
            assert np.max(np.abs(u)) <= 3.0 * cfg.forcing

    def test_ks_field_is_small_and_smooth(self):
        cfg = ks_cfg()
        u = random_initial_condition(cfg, seed=4, burn_in=0.0)
        assert 0.01 <= np.max(np.abs(u)) <= 1.0
        spectrum = np.abs(np.fft.fft(u))
        assert spectrum[5:-4].max() < 1e-12  # only modes 1..4 populated


class TestConfigValidation:
    def test_lorenz_needs_four_components(self):
        with pytest.raises(InvalidInputError):
            lorenz_cfg(n=3)

    def test_ks_needs_power_of_two(self):
        with pytest.raises(InvalidInputError):
            ks_cfg(n=100)

    def test_sample_step_must_divide(self):
        with pytest.raises(InvalidInputError):
            SystemConfig(LORENZ96, 8, 0.01, 0.025, forcing=4.0)

    def test_trajectory_needs_two_snapshots(self):
        with pytest.raises(InvalidInputError):
            TrajectoryMatrix(np.zeros((4, 1)), 0.0, 0.1, LORENZ96)

    def test_dispatch_matches_tag(self):
        cfg = lorenz_cfg()
        u0 = np.full(40, 4.0)
        traj = integrate(cfg, u0, 1.0)
        assert traj.system_tag == LORENZ96
        with pytest.raises(InvalidInputError):
            integrate_ks(cfg, u0, 1.0)

import numpy as np
import pytest

from conftest import random_symmetric_env
from samplingdyn.dynamics import Environment, SampleSizeDistribution
from samplingdyn.flow import integrate
from samplingdyn.games import CoordinationGame
from samplingdyn.oracle import empirical_response, simulate_population

THETA_15 = SampleSizeDistribution.of({1: 0.5, 5: 0.5})


class TestEmpiricalResponse:
    def test_unit_theta_recovers_share(self, rng):
        env = Environment.symmetric(2.0, SampleSizeDistribution.point(1))
        for p in (0.1, 0.5, 0.9):
            est, se = empirical_response(env, p, 200_000, seed=3)
            assert abs(est - p) < 3 * se + 1e-9

    def test_pair_sampling_value(self):
        env = Environment.symmetric(1.2, SampleSizeDistribution.point(2))
        est, se = empirical_response(env, 0.5, 10**6, seed=42)
        assert abs(est - 0.75) < 3 * se

    def test_seed_determinism(self):
        env = Environment.symmetric(1.2, SampleSizeDistribution.point(2))
        a = empirical_response(env, 0.37, 50_000, seed=9)
        b = empirical_response(env, 0.37, 50_000, seed=9)
        assert a == b

    def test_mean_field_agreement_grid(self, rng):
        # 20-point grid, several random environments, 4 standard errors
        # (the error scale uses the mean-field value too: an all-zero draw
        # has zero sample error but the true response can be small-positive)
        n = 20_000
        for _ in range(10):
            env = random_symmetric_env(rng, max_k=10)
            w = env.single_response()
            for p in np.linspace(0.0, 1.0, 20):
                est, se = empirical_response(env, float(p), n, seed=int(p * 1000))
                truth = w(float(p))
                scale = max(se, np.sqrt(max(truth * (1.0 - truth), 0.0) / n))
                assert abs(est - truth) <= 4 * scale + 1e-9

    def test_validation(self):
        env = Environment.symmetric(1.2, SampleSizeDistribution.point(2))
        with pytest.raises(ValueError):
            empirical_response(env, 0.5, 0, seed=1)
        with pytest.raises(ValueError):
            empirical_response(env, 1.5, 10, seed=1)


class TestSimulatePopulation:
    def test_risk_dominant_takeover(self):
        env = Environment.symmetric(1.2, SampleSizeDistribution.point(2))
        traj = simulate_population(env, n=20_000, t_max=40.0, dt=0.01, seed=1, initial=0.01)
        assert traj.final_state > 0.99

    def test_absorbing_zero(self):
        env = Environment.symmetric(1.2, SampleSizeDistribution.point(2))
        traj = simulate_population(env, n=500, t_max=5.0, dt=0.01, seed=1, initial=0.0)
        assert np.all(traj.states == 0.0)

    def test_seed_determinism(self):
        env = Environment.of(CoordinationGame(5.0, 0.2), THETA_15)
        a = simulate_population(env, n=1000, t_max=2.0, seed=42, initial=(0.5, 0.5))
        b = simulate_population(env, n=1000, t_max=2.0, seed=42, initial=(0.5, 0.5))
        assert np.array_equal(a.states, b.states)

    def test_tracks_mean_field(self):
        env = Environment.of(CoordinationGame(5.0, 0.2), THETA_15)
        sim = simulate_population(
            env, n=50_000, t_max=30.0, dt=0.01, seed=7, initial=(0.5, 0.5)
        )
        ref = integrate(env, (0.5, 0.5), t_max=30.0, dt=0.01)
        m = min(len(sim.states), len(ref.states))
        gap = np.max(np.abs(sim.states[:m] - ref.states[:m]))
        assert gap < 0.03

    def test_states_stay_in_bounds(self):
        env = Environment.of(CoordinationGame(5.0, 0.2), THETA_15)
        traj = simulate_population(env, n=500, t_max=5.0, seed=3)
        assert np.all((traj.states >= 0.0) & (traj.states <= 1.0))
        assert np.all(np.diff(traj.times) > 0)

    def test_validation(self):
        env = Environment.symmetric(1.2, SampleSizeDistribution.point(2))
        with pytest.raises(ValueError):
            simulate_population(env, n=10, t_max=1.0)
        asym = Environment.of(CoordinationGame(5.0, 0.2), THETA_15)
        with pytest.raises(ValueError):
            simulate_population(asym, n=500, t_max=1.0, initial=0.5)

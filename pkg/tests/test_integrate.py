import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from autoresonance.errors import ConfigError, StiffnessError
from autoresonance.integrate import IntegratorConfig, Trajectory, hermite, integrate


def decay(t, y):
    return -y


def harmonic(t, y):
    return np.array([y[1], -y[0]])


def endpoint_error(rtol):
    traj = integrate(decay, [1.0], 0.0, 1.0, IntegratorConfig(rel_tol=rtol, abs_tol=1e-14))
    return abs(traj.final_state[0] - math.exp(-1))


class TestAccuracy:
    def test_linear_decay(self):
        traj = integrate(decay, [1.0], 0.0, 1.0, IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12))
        assert traj.status == "completed"
        assert traj.final_time == 1.0
        assert abs(traj.final_state[0] - 0.36787944117144233) < 1e-8

    def test_harmonic_energy(self):
        traj = integrate(harmonic, [1.0, 0.0], 0.0, 100.0, IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12))
        energy = np.sum(traj.states**2, axis=1)
        assert np.max(np.abs(energy - 1.0)) < 1e-7

    @pytest.mark.parametrize("rtol", [1e-5, 1e-7, 1e-9])
    def test_convergence(self, rtol):
        assert endpoint_error(rtol / 2) * 1.5 <= endpoint_error(rtol)

    def test_fixed_rk4(self):
        errs = []
        for h in (0.1, 0.05):
            traj = integrate(decay, [1.0], 0.0, 1.0, IntegratorConfig(method="fixed_rk4", h_init=h, h_max=h))
            errs.append(abs(traj.final_state[0] - math.exp(-1)))
            assert traj.n_steps == round(1 / h)
        assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)

    def test_times_strictly_increasing(self):
        traj = integrate(harmonic, [1.0, 0.0], 0.0, 10.0)
        assert np.all(np.diff(traj.times) > 0)
        assert np.all(np.isfinite(traj.states))


class TestControl:
    def test_step_limit(self):
        traj = integrate(harmonic, [1.0, 0.0], 0.0, 100.0, IntegratorConfig(max_steps=10))
        assert traj.status == "step_limit"
        assert traj.n_steps == 10
        assert traj.final_time < 100.0

    def test_stiffness(self):
        with pytest.raises(StiffnessError):
            integrate(lambda t, y: np.array([1.0 / (1.0 - t)]), [0.0], 0.0, 2.0)

    def test_escape_bisection(self):
        traj = integrate(lambda t, y: np.array([1.0]), [0.0], 0.0, 10.0, escape=lambda t, y: y[0] > 2.5)
        assert traj.status == "escaped"
        assert traj.escape_time == pytest.approx(2.5, abs=1e-6)
        assert traj.escape_time >= 2.5

    def test_validity(self):
        traj = integrate(decay, [1.0], 0.0, 5.0, valid=lambda t, y: y[0] > 0.5)
        assert traj.status == "validity_violation"
        assert traj.final_state[0] <= 0.5

    def test_breakpoints_are_hit(self):
        def rhs(t, y):
            return np.array([1.0 if t < 1.3 else -1.0])

        traj = integrate(rhs, [0.0], 0.0, 3.0, breakpoints=[1.3])
        assert 1.3 in traj.times
        assert traj.final_state[0] == pytest.approx(1.3 - 1.7, abs=1e-8)

    def test_dense_output(self):
        grid = np.linspace(0, 10, 57)
        traj = integrate(harmonic, [1.0, 0.0], 0.0, 10.0, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12), t_eval=grid)
        assert np.array_equal(traj.times, grid)
        assert np.max(np.abs(traj.states[:, 0] - np.cos(grid))) < 1e-6

    def test_dense_outside_interval(self):
        traj = integrate(decay, [1.0], 0.0, 1.0)
        with pytest.raises(ValueError):
            traj.dense([1.5])

    def test_bad_input(self):
        with pytest.raises(ValueError):
            integrate(decay, [math.nan], 0.0, 1.0)
        with pytest.raises(ValueError):
            integrate(decay, [1.0], 1.0, 1.0)

    @pytest.mark.parametrize(
        "kwargs", [{"method": "euler"}, {"rel_tol": 0.0}, {"abs_tol": -1.0}, {"h_max": math.inf}, {"max_steps": 0}]
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ConfigError):
            IntegratorConfig(**kwargs)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1))
def test_hermite_reproduces_cubics(a, b, c, d, u):
    def p(t):
        return a + b * t + c * t**2 + d * t**3

    def dp(t):
        return b + 2 * c * t + 3 * d * t**2

    t0, t1 = 0.5, 2.0
    t = t0 + u * (t1 - t0)
    assert hermite(t0, t1, p(t0), p(t1), dp(t0), dp(t1), t) == pytest.approx(p(t), abs=1e-10)


def test_trajectory_without_derivs():
    traj = Trajectory(times=np.array([0.0, 1.0]), states=np.zeros((2, 1)), status="completed")
    with pytest.raises(ValueError):
        traj.dense([0.5])

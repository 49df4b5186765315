import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from autoresonance.asymptotics import reference_series
from autoresonance.dynamics import DuffingParams, ModelParams, PhaseState, rhs_unperturbed
from autoresonance.errors import ConfigError, DomainError, FitError
from autoresonance.integrate import IntegratorConfig, Trajectory
from autoresonance.perturbations import Distribution, example1_drift, make_example1
from autoresonance.simulation import (
    BasinGrid,
    CaptureCriterion,
    JumpTrainFactory,
    MonteCarloConfig,
    PhaseProblem,
    SingleJumpFactory,
    ZeroFactory,
    basin_scan,
    classify_initial,
    decay_rate_fit,
    deviation_norm,
    duffing_compare,
    duffing_initial_slow_state,
    integrate_until_escape,
    monte_carlo_escape,
    trial_seeds,
    wilson_interval,
    write_trajectory_csv,
)

P = ModelParams(1.0, 0.5, 0.2)
P_NEG = ModelParams(1.0, 0.5, -0.2)


class TestDeviationNorm:
    def test_on_reference(self, ref1):
        r, psi = ref1.eval(37.0)
        assert deviation_norm(PhaseState(r, psi), 37.0, ref1) == 0.0

    def test_amplitude_offset(self, ref1):
        r, psi = ref1.eval(100.0)
        assert deviation_norm(PhaseState(r + 1.0, psi), 100.0, ref1) == pytest.approx(0.1, abs=1e-13)

    def test_example1_drift(self, ref1):
        d = example1_drift(P, 0.1)
        r_ref, _ = ref1.eval(100.0)
        state = PhaseState(r_ref - 0.1 * 100.0, d.phase_limit)
        assert deviation_norm(state, 100.0, ref1) == pytest.approx(1.0, abs=0.1)

    def test_variants(self, ref1):
        lam2 = ModelParams(4.0, 0.5, 0.2)
        ref = reference_series(lam2, 1)
        r, psi = ref.eval(25.0)
        s = PhaseState(r + 3.0, psi + 0.4)
        assert deviation_norm(s, 25.0, ref, "tau") == pytest.approx(0.6 + 0.4)
        assert deviation_norm(s, 25.0, ref, "lambda_tau") == pytest.approx(0.3 + 0.4)
        assert deviation_norm(s, 25.0, ref, "euclidean") == pytest.approx(0.5)

    def test_errors(self, ref1):
        with pytest.raises(DomainError):
            deviation_norm(PhaseState(1.0, 1.0), 0.0, ref1)
        with pytest.raises(ConfigError):
            deviation_norm(PhaseState(1.0, 1.0), 1.0, ref1, "manhattan")


class TestEscape:
    def test_stable_run_completes(self, ref1):
        traj = integrate_until_escape(PhaseProblem(P), ref1.eval(10.0), 10.0, 1e3, 0.1, ref1)
        assert traj.status == "completed" and traj.escape_time is None
        assert traj.final_time == 1e3
        assert np.max(deviation_norm((traj.states[:, 0], traj.states[:, 1]), traj.times, ref1)) < 0.1

    def test_unstable_run_escapes(self):
        ref = reference_series(P_NEG, 1)
        r, psi = ref.eval(100.0)
        traj = integrate_until_escape(PhaseProblem(P_NEG), (r, psi + 1e-3), 100.0, 1e3, 0.05, ref)
        assert traj.status == "escaped"
        assert traj.escape_time == pytest.approx(167.19384802, abs=1e-3)

    def test_escape_bracket(self):
        ref = reference_series(P_NEG, 1)
        r, psi = ref.eval(100.0)
        traj = integrate_until_escape(PhaseProblem(P_NEG), (r, psi + 1e-3), 100.0, 1e3, 0.05, ref)
        dev = deviation_norm((traj.states[:, 0], traj.states[:, 1]), traj.times, ref)
        assert np.all(dev[:-1] <= 0.05)
        assert dev[-1] > 0.05 - 1e-6
        before = traj.dense([traj.escape_time - 1e-6])[0]
        assert deviation_norm(PhaseState(*before), traj.escape_time - 1e-6, ref) <= 0.05

    def test_infinite_threshold(self, ref1):
        traj = integrate_until_escape(PhaseProblem(P_NEG), (5.0, 0.3), 1.0, 200.0, math.inf, ref1, record=False)
        assert traj.status == "completed"
        assert len(traj.times) == 2

    def test_generic_path_agrees(self, ref1):
        problem = PhaseProblem(P)
        start = ref1.eval(20.0)
        kern = integrate_until_escape(problem, start, 20.0, 120.0, 0.1, ref1)
        gen = integrate_until_escape(lambda t, y: rhs_unperturbed(PhaseState(*y), t, P), start, 20.0, 120.0, 0.1, ref1)
        assert kern.meta["backend"] in ("cython", "python") and gen.meta["backend"] == "generic"
        assert kern.final_state == pytest.approx(gen.final_state, rel=1e-8)

    def test_example1_kernel_vs_generic(self, ref1):
        class Opaque:
            """Same triple without a structured form, forcing the generic path."""

            def __init__(self, pert):
                self.pert = pert

            def __call__(self, r, psi, tau):
                return self.pert(r, psi, tau)

        e1 = make_example1()
        start = ref1.eval(10.0)
        kern = integrate_until_escape(PhaseProblem(P, e1, 0.05), start, 10.0, 60.0, 0.5, ref1)
        gen = integrate_until_escape(PhaseProblem(P, Opaque(e1), 0.05), start, 10.0, 60.0, 0.5, ref1)
        assert gen.meta["backend"] == "generic"
        assert kern.status == gen.status
        assert kern.final_state == pytest.approx(gen.final_state, rel=1e-7)

    def test_step_limit(self, ref1):
        traj = integrate_until_escape(PhaseProblem(P), (1.0, 1.0), 1.0, 100.0, math.inf, ref1, IntegratorConfig(max_steps=5))
        assert traj.status == "step_limit"

    def test_bad_arguments(self, ref1):
        with pytest.raises(DomainError):
            integrate_until_escape(PhaseProblem(P), (1.0, 1.0), 10.0, 5.0, 0.1, ref1)
        with pytest.raises(DomainError):
            integrate_until_escape(PhaseProblem(P), (1.0, 1.0), 1.0, 5.0, 0.0, ref1)
        with pytest.raises(DomainError):
            integrate_until_escape(PhaseProblem(P), (1.0, 1.0), 1.0, 5.0, 0.1, None)
        with pytest.raises(DomainError):
            PhaseProblem(P, make_example1(), -0.1)

    def test_trajectory_csv(self, ref1, tmp_path):
        traj = integrate_until_escape(PhaseProblem(P), ref1.eval(10.0), 10.0, 20.0, 0.1, ref1)
        path = tmp_path / "t.csv"
        write_trajectory_csv(traj, path, ref1)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["tau", "r", "psi", "deviation_norm", "status"]
        assert rows[-1][-1] == "completed" and rows[1][-1] == "running"
        assert float(rows[-1][0]) == 20.0
        assert len(rows) == len(traj.times) + 1


class TestBasin:
    def test_invariant_axis(self):
        cell = classify_initial(P, 0.0, 1.0)
        assert cell.cls == "bounded" and cell.r_final == 0.0

    def test_known_points(self):
        # measured with the default criterion at tau_max = 100
        assert classify_initial(P, 1.59, 0.59).cls == "captured"
        assert classify_initial(P, 0.35, 3.09).cls == "bounded"

    def test_scan_order_and_workers(self):
        grid = BasinGrid(0.0, 2.0, 3, 0.0, 6.0, 4)
        pts = grid.points()
        assert pts[:2] == [(0.0, 0.0), (0.0, 2.0)] and len(pts) == 12
        a = basin_scan(P, grid, tau_max=40.0)
        b = basin_scan(P, grid, tau_max=40.0, workers=3)
        assert a.cells == b.cells
        assert sum(a.counts().values()) == 12

    def test_csv(self, tmp_path):
        res = basin_scan(P, [(1.59, 0.59), (0.0, 0.0)], tau_max=30.0)
        res.to_csv(tmp_path / "b.csv")
        rows = list(csv.reader(open(tmp_path / "b.csv")))
        assert rows[0] == ["r0", "psi0", "class", "r_final"]
        assert rows[1][2] == "captured" and rows[2][2] == "bounded"

    def test_criterion_validation(self):
        with pytest.raises(ConfigError):
            CaptureCriterion(1.2, 0.8)
        with pytest.raises(ConfigError):
            CaptureCriterion(phase_window=4.0)
        with pytest.raises(DomainError):
            basin_scan(P, [(-1.0, 0.0)])

    def test_failed_cell(self):
        cell = classify_initial(P, 1.0, 1.0, cfg=IntegratorConfig(max_steps=3))
        assert cell.cls == "failed" and cell.status == "step_limit"


class TestDecayFit:
    def test_synthetic(self):
        t = np.linspace(0, 50, 101)
        rho = np.exp(-0.05 * t)
        traj = Trajectory(t, np.column_stack((rho * np.cos(t), rho * np.sin(t))), "completed")
        fit = decay_rate_fit(traj)
        assert fit.rate == pytest.approx(0.05, abs=1e-6)
        assert fit.residual < 1e-10 and fit.n == 101

    def test_window(self):
        t = np.linspace(0, 50, 101)
        traj = Trajectory(t, np.column_stack((np.exp(-0.05 * t), 0 * t)), "completed")
        with pytest.raises(FitError):
            decay_rate_fit(traj, window=(0.0, 2.0))
        assert decay_rate_fit(traj, window=(10.0, 20.0)).n == 21

    def test_nonpositive(self):
        t = np.linspace(0, 1, 20)
        with pytest.raises(FitError):
            decay_rate_fit(Trajectory(t, np.zeros((20, 2)), "completed"))


class TestMonteCarlo:
    def mc(self, **kw):
        base = dict(
            n_trials=40, mu=0.01, kappa=0.5, epsilon=0.1, tau0=5.0, seed=11, params=P,
            pert=JumpTrainFactory(10, Distribution.uniform(-0.5, 0.5)),
        )
        base.update(kw)
        return MonteCarloConfig(**base)

    def test_zero_factory(self):
        rep = monte_carlo_escape(self.mc(pert=ZeroFactory(), kappa=1.0, n_trials=5, tau0=20.0))
        assert rep.escape_prob == 0.0 and rep.n_failed == 0
        assert rep.wilson_ci_95[0] == 0.0
        assert set(rep.statuses) == {"completed"}

    def test_workers_and_reruns(self):
        mc = self.mc()
        a = monte_carlo_escape(mc).to_dict()
        b = monte_carlo_escape(mc, workers=4).to_dict()
        assert a == b
        assert a["trials"]["seeds"] == trial_seeds(11, 40)

    def test_epsilon_monotone_pathwise(self):
        small = monte_carlo_escape(self.mc(epsilon=0.08, mu=0.02))
        large = monte_carlo_escape(self.mc(epsilon=0.2, mu=0.02))
        assert all(e_large <= e_small for e_small, e_large in zip(small.escaped, large.escaped))
        assert small.n_escaped > 0

    def test_mu_monotone(self):
        probs = [monte_carlo_escape(self.mc(mu=mu)).escape_prob for mu in (0.005, 0.02, 1.0)]
        assert probs == sorted(probs)

    def test_report_fields(self):
        rep = monte_carlo_escape(self.mc(n_trials=8))
        d = rep.to_dict()
        assert set(d) == {"config", "results", "trials"}
        assert d["results"]["horizon"] == pytest.approx(50.0)
        assert d["results"]["tau_end"] == pytest.approx(55.0)
        lo, hi = rep.wilson_ci_95
        assert lo <= rep.escape_prob <= hi
        assert len(rep.nus) == 8 and all(n >= 0 for n in rep.nus)

    def test_single_jump_factory(self):
        fac = SingleJumpFactory(Distribution.uniform(6.0, 20.0), Distribution.uniform(-0.5, 0.5))
        rep = monte_carlo_escape(self.mc(pert=fac, n_trials=10, kappa=0.5))
        assert rep.n_trials == 10 and 0.0 <= rep.escape_prob <= 1.0

    def test_validation(self):
        with pytest.raises(ConfigError):
            self.mc(kappa=1.0)
        with pytest.raises(ConfigError):
            self.mc(n_trials=0)
        with pytest.raises(ConfigError):
            self.mc(norm="sup")

    @given(st.integers(0, 200), st.integers(1, 200))
    def test_wilson(self, k, n):
        k = min(k, n)
        lo, hi = wilson_interval(k, n)
        assert 0.0 <= lo <= k / n <= hi <= 1.0

    def test_wilson_value(self):
        lo, hi = wilson_interval(10, 100)
        assert (lo, hi) == pytest.approx((0.05522913706067509, 0.17436566150491345), abs=1e-12)

    def test_seeds_prefix_stable(self):
        assert trial_seeds(5, 10)[:4] == trial_seeds(5, 4)


class TestDuffing:
    def test_initial_state(self):
        dp = DuffingParams(eps=0.01, beta=0.0, gamma=1.5, alpha=1.25e-5)
        r, psi = duffing_initial_slow_state(3e-3, -4e-3, dp)
        a = math.sqrt(dp.kappa * dp.eps * r)
        assert a == pytest.approx(5e-3)
        assert a * math.cos(0.5 * psi) == pytest.approx(3e-3)
        assert -a * math.sin(0.5 * psi) == pytest.approx(-4e-3)

    def test_short_comparison(self):
        dp = DuffingParams(eps=0.01, beta=0.0, gamma=1.5, alpha=1.25e-5)
        rep = duffing_compare(dp, 300.0)
        assert rep.rel_sup_error < 0.3
        assert rep.t.size == rep.envelope.size == rep.r.size
        assert rep.averaged_params["lambda"] == pytest.approx(1.0)

    def test_no_branch(self):
        with pytest.raises(DomainError):
            duffing_compare(DuffingParams(eps=0.01, beta=0.006, gamma=1.5, alpha=1.25e-5), 100.0)

    def test_short_horizon(self):
        with pytest.raises(DomainError):
            duffing_compare(DuffingParams(eps=0.01, beta=0.0, gamma=1.5, alpha=1.25e-5), 5.0)

import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autoresonance.asymptotics import (
    MAX_ORDER,
    Branch,
    SeriesCoeffs,
    eval_reference,
    extend_coeffs,
    leading_coeffs,
    reference_series,
    residual,
)
from autoresonance.dynamics import ModelParams
from autoresonance.errors import DegenerateParametersError, DomainError

from oracles import PSI0_MINUS, PSI1_MINUS, R0_MINUS, R1_MINUS, SERIES1_PSI_AT_100, SERIES1_R_AT_100

params_st = st.builds(
    ModelParams,
    lam=st.floats(0.5, 2.0),
    delta=st.floats(0.1, 0.9),
    f=st.floats(0.1, 2.0),
)


def slope(taus, values):
    return np.polyfit(np.log(taus), np.log(np.abs(values)), 1)[0]


class TestLeadingCoeffs:
    def test_minus(self, fig2_params):
        psi0, r0, psi1, r1 = leading_coeffs(fig2_params, "minus")
        assert psi0 == pytest.approx(PSI0_MINUS, abs=1e-14)
        assert r0 == pytest.approx(R0_MINUS, abs=1e-14)
        assert psi1 == pytest.approx(PSI1_MINUS, abs=1e-14)
        assert r1 == pytest.approx(R1_MINUS, abs=1e-14)

    def test_plus(self, fig2_params):
        psi0, r0, psi1, r1 = leading_coeffs(fig2_params, "plus")
        assert psi0 == pytest.approx(math.pi / 6, abs=1e-15)
        assert r0 == pytest.approx(-R0_MINUS, abs=1e-14)
        assert psi1 == pytest.approx(-PSI1_MINUS, abs=1e-14)
        assert r1 == pytest.approx(-R1_MINUS, abs=1e-14)

    def test_delta_zero_limit(self):
        psi0, r0, psi1, r1 = leading_coeffs(ModelParams(1.0, 1e-12, 0.2), "minus")
        assert psi0 == pytest.approx(math.pi, abs=1e-11)
        assert r0 == pytest.approx(0.2, abs=1e-11)
        assert psi1 == pytest.approx(-1.0, abs=1e-11)
        assert r1 == pytest.approx(0.0, abs=1e-11)

    def test_as_consistency(self, fig2_params):
        # cos(psi_0) = -sigma on the minus branch, so psi_1 = -1/sigma
        psi0, r0, psi1, _ = leading_coeffs(fig2_params, "minus")
        assert math.cos(psi0) == pytest.approx(-fig2_params.sigma, abs=1e-15)
        assert psi1 == pytest.approx(-1.0 / fig2_params.sigma, abs=1e-14)
        assert r0 == pytest.approx(fig2_params.f * fig2_params.sigma, abs=1e-15)

    @pytest.mark.parametrize("delta", [0.0, 1.0, 1.5])
    def test_domain(self, delta):
        with pytest.raises(DomainError):
            leading_coeffs(ModelParams(1.0, delta, 0.2))

    def test_bad_branch(self, fig2_params):
        with pytest.raises(DomainError):
            leading_coeffs(fig2_params, "sideways")

    @given(params_st)
    def test_branch_symmetry(self, p):
        lp = leading_coeffs(p, "plus")
        lm = leading_coeffs(p, "minus")
        assert math.sin(lp[0]) == pytest.approx(p.delta, abs=1e-12)
        assert math.sin(lm[0]) == pytest.approx(p.delta, abs=1e-12)
        assert lp[1] == pytest.approx(-lm[1], abs=1e-12)
        assert 0 <= lp[0] < math.pi / 2 < lm[0] <= math.pi

    @given(params_st, st.sampled_from(["plus", "minus"]))
    def test_closed_forms(self, p, br):
        psi0, r0, psi1, r1 = leading_coeffs(p, br)
        assert psi1 == pytest.approx(1.0 / math.cos(psi0), abs=1e-12)
        assert r0 == pytest.approx(-p.f * math.cos(psi0), abs=1e-12)
        assert r1 == pytest.approx(p.f * math.tan(psi0), abs=1e-12)


class TestExtendCoeffs:
    @pytest.mark.parametrize("branch", ["plus", "minus"])
    def test_order_one_matches_closed_form(self, fig2_params, branch):
        s = extend_coeffs(fig2_params, branch, 1)
        psi0, r0, psi1, r1 = leading_coeffs(fig2_params, branch)
        assert s.psi_coeffs == (psi0, psi1)
        assert s.r_coeffs == (r0, r1)

    @given(params_st, st.sampled_from(["plus", "minus"]), st.integers(1, MAX_ORDER))
    def test_truncation_is_prefix(self, p, br, J):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            full = extend_coeffs(p, br, J).truncate(J - 1)
            direct = extend_coeffs(p, br, J - 1)
        assert full.r_coeffs == direct.r_coeffs
        assert full.psi_coeffs == direct.psi_coeffs

    @pytest.mark.parametrize("J", [1, 2, 3])
    def test_psi_residual_slope(self, fig2_params, J):
        taus = np.array([1e2, 1e3, 1e4])
        _, res_psi = residual(extend_coeffs(fig2_params, "minus", J), taus, precision=50)
        assert slope(taus, res_psi) == pytest.approx(-(J + 1), abs=0.1)
        ratios = np.abs(res_psi[1:] / res_psi[:-1])
        assert np.all((ratios > 10.0 ** -(J + 1) / 2) & (ratios < 2 * 10.0 ** -(J + 1)))

    @pytest.mark.parametrize("J", [1, 2])
    def test_r_residual_slope(self, fig2_params, J):
        # the amplitude equation loses one power: O(tau^-J)
        taus = np.geomspace(1e2, 1e4, 5)
        res_r, _ = residual(extend_coeffs(fig2_params, "minus", J), taus, precision=50)
        assert slope(taus, res_r) == pytest.approx(-J, abs=0.1)

    def test_order_one_residual_size(self, fig2_params, series1):
        res_r, res_psi = residual(series1, 1e3)
        assert abs(res_psi) <= 10 * 1e3**-2
        assert abs(res_r) <= 10 * 1e3**-1

    def test_order_zero_psi_residual_vanishes(self, fig2_params):
        # r_0 = -f cos(psi_0) cancels the phase equation exactly at J = 0
        res_r, res_psi = residual(extend_coeffs(fig2_params, "minus", 0), np.array([1e2, 1e4]))
        assert np.all(np.abs(res_psi) < 1e-15)
        assert np.allclose(res_r, fig2_params.lam)

    @settings(max_examples=10)
    @given(params_st, st.integers(1, 3))
    def test_recurrence_oracle(self, p, J):
        taus = np.geomspace(1e2, 1e4, 5)
        _, res_psi = residual(extend_coeffs(p, "minus", J), taus, precision=60)
        assert slope(taus, res_psi) <= -(J + 0.8)

    def test_degenerate(self):
        with pytest.raises(DegenerateParametersError):
            extend_coeffs(ModelParams(1.0, 1.0, 0.2), "minus", 2)

    def test_order_bounds(self, fig2_params):
        with pytest.raises(DomainError):
            extend_coeffs(fig2_params, "minus", MAX_ORDER + 1)
        with pytest.raises(DomainError):
            extend_coeffs(fig2_params, "minus", -1)

    def test_conditioning_warning(self):
        with pytest.warns(RuntimeWarning):
            s = extend_coeffs(ModelParams(1.0, 0.999999, 1.0), "minus", 4)
        assert s.warnings

    def test_json_round_trip(self, fig2_params):
        s = extend_coeffs(fig2_params, "plus", 4)
        back = SeriesCoeffs.from_dict(json.loads(json.dumps(s.to_dict())))
        assert back == s
        assert back.branch is Branch.PLUS and back.order == 4


class TestEvalReference:
    def test_values(self, series1):
        r, psi = eval_reference(series1, 100.0)
        assert r == pytest.approx(SERIES1_R_AT_100, abs=1e-12)
        assert psi == pytest.approx(SERIES1_PSI_AT_100, abs=1e-13)

    def test_limit(self, series1):
        assert eval_reference(series1, 1e15).psi == pytest.approx(PSI0_MINUS, abs=1e-14)

    def test_order_zero(self, fig2_params):
        s = extend_coeffs(fig2_params, "minus", 0)
        r, psi = eval_reference(s, 12.5)
        assert r == 12.5 + s.r_coeffs[0]
        assert psi == s.psi_coeffs[0]

    def test_domain(self, series1):
        with pytest.raises(DomainError):
            eval_reference(series1, 0.0)

    @given(params_st, st.integers(0, 6), st.floats(2.0, 1e5))
    def test_horner_vs_direct(self, p, J, tau):
        s = extend_coeffs(p, "minus", J)
        r, psi = s.eval(tau)
        r_direct = p.lam * tau + math.fsum(c * tau**-j for j, c in enumerate(s.r_coeffs))
        psi_direct = math.fsum(c * tau**-j for j, c in enumerate(s.psi_coeffs))
        assert r == pytest.approx(r_direct, rel=1e-14)
        assert psi == pytest.approx(psi_direct, rel=1e-14, abs=1e-14)

    def test_reference_series_shape(self, fig2_params):
        ref = reference_series(fig2_params, 1)
        assert len(ref.r_coeffs) == 1 and len(ref.psi_coeffs) == 2
        assert ref.r_coeffs[0] == pytest.approx(fig2_params.f * fig2_params.sigma, abs=1e-15)
        with pytest.raises(DomainError):
            reference_series(fig2_params, 0)

    def test_derivative_matches_finite_difference(self, fig2_params):
        s = extend_coeffs(fig2_params, "minus", 4)
        tau, h = 50.0, 1e-5
        dr, dpsi = s.derivative(tau)
        (rp, pp), (rm, pm) = s.eval(tau + h), s.eval(tau - h)
        assert dr == pytest.approx((rp - rm) / (2 * h), rel=1e-8)
        assert dpsi == pytest.approx((pp - pm) / (2 * h), abs=1e-10)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from ppassive.circuits import (Atanh, ClosedLoopCircuit, FeedbackPath, OddPower,
                               OpAmpParams, Sinh, Switches,
                               bistability_check, boundedness_certificate,
                               build_bistable,
                               circuit_from_dict, circuit_to_dict,
                               closed_loop_certificates, closed_loop_jacobian,
                               closed_loop_vector_field, equilibria,
                               loop_transfer_function, mixed_feedback_coefficients,
                               nonlinearity_from_dict, opamp_certificate,
                               stiffening_radius)
from ppassive.errors import AssumptionViolatedError, ValidationError
from ppassive.lti import StateSpaceModel

from conftest import C0, PHI, R0, R1, opamp


def bistable_root(alpha=1.0, Ra=1e3):
    # x^4 = (alpha R1/(R1 + Ra) - 1/R0) 12^5
    return ((alpha * R1 / (R1 + Ra) - 1.0 / R0) * 12.0**5) ** 0.25


class TestNonlinearities:
    @pytest.mark.parametrize("phi", [Sinh(1e-3, 0.5), OddPower(5, 12.0), OddPower(1, 2.0),
                                     Atanh(0.1, 10.0)])
    def test_odd_and_monotone(self, phi):
        xs = np.linspace(-0.9, 0.9, 19) * min(phi.domain, 30.0)
        np.testing.assert_allclose(phi(-xs), -phi(xs))
        assert np.all(np.diff(phi(xs)) > 0)

    @pytest.mark.parametrize("phi", [Sinh(1e-3, 0.5), OddPower(5, 12.0), Atanh(0.1, 10.0)])
    def test_derivative(self, phi):
        for x in (-3.0, 0.4, 7.0):
            h = 1e-6 * max(1.0, abs(x))
            fd = (phi(x + h) - phi(x - h)) / (2 * h)
            assert phi.derivative(x) == pytest.approx(fd, rel=1e-6, abs=1e-12)

    def test_even_exponent_rejected(self):
        with pytest.raises(ValidationError):
            OddPower(4, 12.0)

    def test_from_dict(self):
        phi = nonlinearity_from_dict({"kind": "sinh", "params": {"eta": 1.0, "beta": 2.0}})
        assert phi == Sinh(1.0, 2.0)
        assert nonlinearity_from_dict(phi.to_dict()) == phi

    def test_from_dict_lists_problems(self):
        with pytest.raises(ValidationError) as err:
            nonlinearity_from_dict({"kind": "sinh", "params": {"eta": 1.0, "gamma": 2.0}})
        assert len(err.value.violations) == 2


class TestStiffening:
    @given(st.floats(1e-6, 1e6))
    def test_odd_power_closed_form(self, k):
        r = stiffening_radius(PHI, k)
        assert r == pytest.approx((k * 12.0**5) ** 0.25, rel=1e-8)

    def test_sinh_against_brentq(self):
        phi = Sinh(1e-3, 0.5)
        k = 2.0
        want = brentq(lambda y: phi(y) / y - k, 1e-3, 100.0, xtol=1e-14)
        assert stiffening_radius(phi, k) == pytest.approx(want, rel=1e-8)

    def test_sinh_below_slope_is_zero(self):
        assert stiffening_radius(Sinh(1.0, 1.0), 0.5) == 0.0

    def test_atanh_inside_domain(self):
        phi = Atanh(1.0, 5.0)
        want = brentq(lambda y: phi(y) / y - 0.5, 1e-3, 4.999, xtol=1e-14)
        r = stiffening_radius(phi, 0.5)
        assert r == pytest.approx(want, rel=1e-8) and r < 5.0

    def test_linear_map_cannot_dominate(self):
        with pytest.raises(AssumptionViolatedError):
            stiffening_radius(OddPower(1, 1.0), 2.0)


class TestOpAmp:
    def test_pole(self):
        assert opamp(0.1).pole == pytest.approx(62.893, rel=1e-4)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            OpAmpParams(-1.0, C0, 1.0, PHI)

    def test_certificate_interval(self):
        cert = opamp_certificate(opamp(0.1))
        assert cert.degree == 0 and cert.strict
        assert cert.rates.lo == 0.0 and not cert.rates.lo_open
        assert cert.rates.hi == pytest.approx(1.0 / (R0 * C0), rel=1e-9)


class TestVectorField:
    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=4, max_size=4))
    def test_jacobian_matches_finite_differences(self, y):
        from ppassive.circuits import build_ladder_oscillator
        cl = build_ladder_oscillator(R1, 200e-6, opamp(0.1))
        y = np.array(y)
        J = closed_loop_jacobian(cl, y)
        for i in range(4):
            h = 1e-6 * max(1.0, abs(y[i]))
            e = np.zeros(4)
            e[i] = h
            fd = (closed_loop_vector_field(cl, y + e) - closed_loop_vector_field(cl, y - e)) / (2 * h)
            np.testing.assert_allclose(J[:, i], fd, rtol=1e-5, atol=1e-6 * np.max(np.abs(J)))

    def test_odd_symmetry(self, oscillator):
        y = np.array([1.3, -0.2, 0.5, 2.0])
        np.testing.assert_allclose(closed_loop_vector_field(oscillator, -y),
                                   -closed_loop_vector_field(oscillator, y))

    def test_mixed_with_only_upper_path_is_bistable_loop(self, mixed, bistable):
        cl = mixed.with_switches(Switches(True, False))
        y = np.array([3.0, 1.5, -0.7])
        f = closed_loop_vector_field(cl, y)
        fb = closed_loop_vector_field(bistable, y[:2])
        np.testing.assert_allclose(f[:2], fb)


class TestEquilibria:
    def test_bistable_roots(self, bistable):
        eqs = equilibria(bistable)
        x = [e.x for e in eqs]
        r = bistable_root()
        np.testing.assert_allclose(x, [-r, 0.0, r], atol=1e-9)
        assert r == pytest.approx(20.9, abs=0.1)
        assert [e.stability for e in eqs] == ["stable", "unstable", "stable"]
        assert eqs[1].unstable_dim == 1

    def test_bistable_root_is_stationary(self, bistable):
        eq = equilibria(bistable)[-1]
        f = closed_loop_vector_field(bistable, eq.state)
        assert np.linalg.norm(f) < 1e-6 * (1.0 + np.linalg.norm(eq.state))

    def test_oscillator_unique_unstable_origin(self, oscillator):
        (eq,) = equilibria(oscillator)
        assert eq.x == 0.0 and eq.stability == "unstable"
        assert np.max(np.linalg.eigvals(closed_loop_jacobian(oscillator, eq.state)).real) > 0

    @pytest.mark.parametrize("Ra", [300.0, 1e3, 2.5e3])
    def test_symmetric_roots(self, Ra):
        cl = build_bistable(R1, Ra, 100e-6, opamp(1.0))
        x = np.array([e.x for e in equilibria(cl)])
        np.testing.assert_allclose(np.sort(x), np.sort(-x), atol=1e-9)

    def test_reference_voltage_breaks_symmetry(self, bistable):
        x = [e.x for e in equilibria(bistable.with_Vr(2.0))]
        assert not np.allclose(np.sort(x), np.sort(-np.array(x)))


class TestBistability:
    def test_condition_holds(self, bistable):
        assert bistability_check(bistable)

    def test_condition_fails_for_weak_gain(self):
        cl = build_bistable(R1, 1e3, 100e-6, opamp(1e-7))
        assert not bistability_check(cl)
        assert len(equilibria(cl)) == 1

    def test_wrong_topology(self, oscillator):
        with pytest.raises(ValidationError):
            bistability_check(oscillator)


class TestMixedFeedback:
    def test_aggregate_transfer_function(self, mixed):
        a1, a2, b1, b2 = mixed_feedback_coefficients(R1, R1, 1e3, 1e3, 100e-6, 200e-6)
        g = loop_transfer_function(mixed)
        for s in (0.0, 1.0 + 2.0j, 30.0j):
            want = ((a2 - a1) * s + a2 * b1 - a1 * b2) / ((s + b1) * (s + b2))
            assert g(s) == pytest.approx(want, rel=1e-12, abs=1e-14)

    def test_closed_loop_is_two_passive(self, mixed):
        certs = closed_loop_certificates(mixed, degrees=[2])
        (pair,) = certs
        net, cl = pair
        a1, a2, b1, b2 = mixed_feedback_coefficients(R1, R1, 1e3, 1e3, 100e-6, 200e-6)
        assert cl.rates.lo == pytest.approx((a2 * b2 - a1 * b1) / (a2 - a1), abs=1e-6)
        assert cl.rates.hi == pytest.approx(1.0 / (R0 * C0), rel=1e-9)

    def test_oscillator_certificate(self, oscillator):
        ((net, cl),) = closed_loop_certificates(oscillator)
        assert cl.degree == 2
        assert cl.rates.lo == pytest.approx(2.52, abs=0.02)
        assert cl.rates.hi == pytest.approx(4.92, abs=0.02)


class TestBoundedness:
    def test_oscillator(self, oscillator):
        b = boundedness_certificate(oscillator)
        assert math.isfinite(b.r) and b.r > 0 and b.level > 0
        assert b.storage(np.zeros(4))[0] == 0.0

    def test_auto_weight_not_worse_than_fixed(self, oscillator):
        auto = boundedness_certificate(oscillator)
        fixed = boundedness_certificate(oscillator, q_scale=1.0)
        assert auto.level <= fixed.level

    @pytest.mark.parametrize("sign, rho", [(+1, 1.5), (-1, 0.5)])
    def test_scalar_hand_values(self, sign, rho):
        # A=-1, B=C=1, alpha=C0=1, Q=I: P=1/2, rho=|alpha/C0 * sign + P B|
        op = OpAmpParams(1.0, 1.0, 1.0, OddPower(3, 1.0))
        net = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]])
        b = boundedness_certificate(ClosedLoopCircuit(op, (FeedbackPath(net, sign),)),
                                    q_scale=1.0)
        assert b.P[0, 0] == pytest.approx(0.5)
        assert b.rho == pytest.approx(rho)
        assert b.eps == pytest.approx(1.0 / (2.0 * rho))
        # x phi(x) = x^4 > (rho/eps) x^2 beyond sqrt(2 rho^2)
        assert b.r == pytest.approx(math.sqrt(2.0) * rho, abs=1e-5)

    def test_nonzero_reference(self, bistable):
        b = boundedness_certificate(bistable.with_Vr(1.0))
        assert b.r >= 1.0


class TestCircuitFiles:
    def test_roundtrip(self, mixed):
        d = circuit_to_dict(mixed)
        back = circuit_from_dict(d)
        assert circuit_to_dict(back) == d

    def test_negative_resistor(self, bistable):
        d = circuit_to_dict(bistable)
        d["components"]["R1"] = -1.0
        with pytest.raises(ValidationError, match="R1"):
            circuit_from_dict(d)

    def test_every_violation_listed(self, bistable):
        d = circuit_to_dict(bistable)
        d["components"]["R1"] = -1.0
        d["components"]["C1"] = 0.0
        d["colour"] = "red"
        d["phi"] = {"kind": "cubic", "params": {}}
        with pytest.raises(ValidationError) as err:
            circuit_from_dict(d)
        assert len(err.value.violations) == 4

    def test_unknown_topology(self):
        with pytest.raises(ValidationError, match="topology"):
            circuit_from_dict({"topology": "ring", "components": {}, "phi": PHI.to_dict()})

"""End-to-end acceptance checks for the worked circuit examples.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion. Run directly with ``python3 tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from ppassive.certify import (compose_feedback, count_dominant_poles, certify_p_passive,
                              inertia, kyp_storage, lyapunov_inertia, rate_intervals,
                              verify_passivity_lmi)
from ppassive.circuits import (Switches, bistability_check, boundedness_certificate,
                               build_rc_ladder3, closed_loop_jacobian,
                               closed_loop_vector_field, equilibria, loop_transfer_function,
                               opamp_certificate)
from ppassive.lti import StateSpaceModel, poles, tf_from_state_space
from ppassive.sim import (classify_attractor, integrate, multistability_probe,
                          sweep_classification, sweep_label, uniform_ball)

from conftest import C0, R0, R1, opamp, random_stable_system

LADDER_POLES = (-4.92, -2.35, -0.30)
LADDER_RATES = (2.52, 4.92)
# fourth root of 12^5 (R1/(R1+Ra) - 1/R0) for the bistable values
BISTABLE_X = (12.0 ** 5 * (R1 / (R1 + 1e3) - 1.0 / R0)) ** 0.25
MIXED_RATES = (19.5, 1.0 / (R0 * C0))

_runs = {}


def oscillator_run(cl):
    if "osc" not in _runs:
        _runs["osc"] = integrate(cl, [0.1, 0, 0, 0], 40.0, 1e-4)
    return _runs["osc"]


def vf_for(cl, sw=None):
    return lambda y: closed_loop_vector_field(cl, y, sw)


@pytest.mark.criterion(1, "ladder pole reproduction")
def test_ladder_poles():
    t0 = time.perf_counter()
    ps = np.sort(poles(tf_from_state_space(build_rc_ladder3(R1, 200e-6))).poles.real)
    assert time.perf_counter() - t0 < 1.0
    np.testing.assert_allclose(ps, LADDER_POLES, atol=0.01)


@pytest.mark.criterion(2, "ladder 2-passivity rate window")
def test_ladder_rate_window(oscillator):
    t0 = time.perf_counter()
    g = loop_transfer_function(oscillator)
    ivs = rate_intervals(g, 2)
    assert len(ivs) == 1
    iv = ivs[0]
    assert (iv.lo, iv.hi) == pytest.approx(LADDER_RATES, abs=0.02)
    op = opamp_certificate(oscillator.opamp)
    assert op.rates.hi == pytest.approx(1.0 / (R0 * C0))
    cert = compose_feedback(op, certify_p_passive(g, iv.midpoint))
    assert cert.degree == 2 and cert.strict
    assert (cert.rates.lo, cert.rates.hi) == pytest.approx(LADDER_RATES, abs=0.02)
    assert time.perf_counter() - t0 < 5.0


@pytest.mark.criterion(3, "ladder oscillator limit cycle")
def test_oscillation(oscillator):
    t0 = time.perf_counter()
    eqs = equilibria(oscillator)
    assert len(eqs) == 1 and eqs[0].x == 0.0
    assert np.max(eqs[0].eigenvalues.real) > 0
    rep = classify_attractor(oscillator_run(oscillator), vf_for(oscillator))
    ref = classify_attractor(integrate(oscillator, [0.1, 0, 0, 0], 40.0, 1e-5, stride=10))
    assert rep.kind == ref.kind == "LimitCycle"
    assert rep.period == pytest.approx(ref.period, rel=0.01)
    assert time.perf_counter() - t0 < 60.0


@pytest.mark.criterion(4, "bistable latch")
def test_bistability(bistable):
    t0 = time.perf_counter()
    assert bistability_check(bistable)
    xs = sorted(e.x for e in equilibria(bistable))
    np.testing.assert_allclose(xs, [-BISTABLE_X, 0.0, BISTABLE_X], atol=0.1)
    res = multistability_probe(bistable, 200, 50.0, seed=0)
    assert res.cluster_count == 2
    assert sorted(round(loc[0], 1) for loc, _ in res.clusters) == [-20.9, 20.9]
    assert time.perf_counter() - t0 < 120.0


@pytest.mark.criterion(5, "mixed feedback regimes")
def test_mixed_feedback(mixed):
    t0 = time.perf_counter()
    g = loop_transfer_function(mixed)
    op = opamp_certificate(mixed.opamp)
    common = [iv.intersect(op.rates) for iv in rate_intervals(g, 2)]
    common = [iv for iv in common if not iv.is_empty]
    assert len(common) == 1
    assert (common[0].lo, common[0].hi) == pytest.approx(MIXED_RATES, abs=0.1)
    cert = compose_feedback(op, certify_p_passive(g, common[0].midpoint))
    assert cert.degree == 2 and cert.strict

    traj = integrate(mixed, [0.1, 0, 0], 40.0, 1e-4)
    _runs["mixed"] = traj
    assert classify_attractor(traj, vf_for(mixed)).kind == "LimitCycle"
    mono = multistability_probe(mixed, 50, 50.0, seed=0, switches=Switches(False, True))
    assert mono.cluster_count == 1 and not mono.undetermined
    bi = multistability_probe(mixed, 50, 50.0, seed=0, switches=Switches(True, False))
    assert bi.cluster_count >= 2 and not bi.undetermined
    assert time.perf_counter() - t0 < 180.0


@pytest.mark.criterion(6, "mixed feedback sweep map")
def test_sweep_map():
    op = opamp(1.0)
    grid = np.linspace(50.0, 3000.0, 60)
    t0 = time.perf_counter()
    m = sweep_classification(R1, R1, 100e-6, 200e-6, op, grid, grid, workers=4)
    elapsed = time.perf_counter() - t0
    assert set(m.counts()) == {"p0", "p2", "none"}
    assert sweep_label(R1, R1, 1e3, 1e3, 100e-6, 200e-6, op) == "p2"
    assert sweep_label(R1, R1, 3e3, 500.0, 100e-6, 200e-6, op) == "p0"
    assert elapsed < 60.0


@pytest.mark.criterion(7, "Lyapunov inertia matches shifted pole count")
def test_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    agree = 0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        A, B, C = random_stable_system(rng, n)
        re = -np.linalg.eigvals(A).real
        lam = rng.uniform(0.0, 12.0)
        while np.min(np.abs(re - lam)) < 1e-3:
            lam = rng.uniform(0.0, 12.0)
        p = count_dominant_poles(tf_from_state_space(StateSpaceModel(A, B, C)), lam)
        P, sig = lyapunov_inertia(A, lam)
        assert sig == (p, 0, n - p) == inertia(P)
        agree += 1
    assert agree == 100
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.criterion(8, "dominance LMI along the limit cycle")
def test_lmi_spot_check(oscillator):
    t0 = time.perf_counter()
    lam = 0.5 * sum(LADDER_RATES)
    c = oscillator.feedback_row()
    net = StateSpaceModel(oscillator.network_A, oscillator.network_B, -c)
    Pn, _ = kyp_storage(net, lam)
    assert inertia(Pn) == (2, 0, 1)
    n = oscillator.state_dim
    P = np.zeros((n, n))
    P[0, 0] = C0 / oscillator.opamp.alpha
    P[1:, 1:] = Pn
    assert inertia(P) == (2, 0, 2)

    traj = oscillator_run(oscillator)
    cycle = traj.states[traj.times >= 20.0]
    idx = np.linspace(0, len(cycle) - 1, 1000).astype(int)
    for s in cycle[idx]:
        assert verify_passivity_lmi(P, lam, 0.0, closed_loop_jacobian(oscillator, s))
    assert time.perf_counter() - t0 < 30.0


def _check_bounded(cl, sw, trajs):
    cert = boundedness_certificate(cl, sw)
    for tr in trajs:
        V = cert.storage(tr.states)
        inside = np.flatnonzero(V <= cert.level)
        assert inside.size, "trajectory never entered the certified set"
        assert np.max(V[inside[0]:]) <= 1.01 * cert.level


@pytest.mark.criterion(9, "trajectories respect the boundedness level")
def test_boundedness(oscillator, bistable, mixed):
    ics = uniform_ball(4, 4, 50.0, seed=9)
    osc = [oscillator_run(oscillator)]
    osc += [integrate(oscillator, y0, 5.0, 1e-4, stride=5) for y0 in ics]
    _check_bounded(oscillator, None, osc)

    ics = uniform_ball(6, 2, 50.0, seed=9)
    _check_bounded(bistable, None, [integrate(bistable, y0, 5.0, 1e-4) for y0 in ics])

    ics = uniform_ball(4, 3, 50.0, seed=9)
    for sw in (Switches(True, True), Switches(False, True), Switches(True, False)):
        cl = mixed.with_switches(sw)
        trajs = [integrate(cl, y0, 5.0, 1e-4, stride=5) for y0 in ics]
        if sw == Switches(True, True) and "mixed" in _runs:
            trajs.append(_runs["mixed"])
        _check_bounded(cl, None, trajs)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

import math

import numpy as np
import pytest
from scipy.linalg import expm

from kpositive.compound import mult_compound
from kpositive.dynamics import (
    BlowUpError,
    LinearSystem,
    Trajectory,
    certify_k_cooperative,
    classify_omega_limit,
    compound_flow,
    invariance_check,
    monotone_chain_check,
    project_to_plane,
    secant_gain,
    signvar_trace,
    simulate,
    transition_matrix,
    variational_matrix,
)
from kpositive.signvar import ConeLabel
from kpositive.systems import (
    PRESETS,
    THREE_POSITIVE_A,
    THREE_POSITIVE_X0,
    cyclic_feedback,
    scalar_nonlinear,
    stable_linear,
    three_positive,
)


def test_transition_matrix_matches_expm():
    sys = three_positive()
    Phi = transition_matrix(sys, 0.0, 1.0, 1e-3)
    np.testing.assert_allclose(Phi, expm(THREE_POSITIVE_A), rtol=1e-8, atol=1e-8)


def test_transition_matrix_trivial():
    assert np.array_equal(transition_matrix(LinearSystem.constant(np.zeros((3, 3))), 0, 2), np.eye(3))
    d = np.array([-1.0, 0.5, 2.0])
    Phi = transition_matrix(LinearSystem.constant(np.diag(d)), 0, 1, 1e-3)
    np.testing.assert_allclose(Phi, np.diag(np.exp(d)), rtol=1e-10)
    np.testing.assert_array_equal(transition_matrix(three_positive(), 1.0, 1.0), np.eye(4))


def test_transition_matrix_cocycle():
    A0 = np.array([[-1.0, 2.0], [0.5, -3.0]])
    sys = LinearSystem(lambda t: A0 + np.sin(t) * np.eye(2), 2)
    P20 = transition_matrix(sys, 0, 2, 1e-3)
    P21 = transition_matrix(sys, 1, 2, 1e-3)
    P10 = transition_matrix(sys, 0, 1, 1e-3)
    np.testing.assert_allclose(P20, P21 @ P10, rtol=1e-9, atol=1e-10)


def test_rk4_is_fourth_order():
    ref = expm(THREE_POSITIVE_A * 0.5)
    errs = [np.abs(transition_matrix(three_positive(), 0, 0.5, h) - ref).max() for h in (0.02, 0.01)]
    assert 12 < errs[0] / errs[1] < 20


def test_window_and_step_errors():
    sys = LinearSystem.constant(np.eye(2), interval=(0.0, 1.0))
    with pytest.raises(ValueError):
        transition_matrix(sys, 0.0, 0.5)
    with pytest.raises(ValueError):
        transition_matrix(sys, 0.2, 1.0)
    with pytest.raises(ValueError):
        transition_matrix(three_positive(), 0, 1, step=0)
    with pytest.raises(ValueError):
        transition_matrix(three_positive(), 1, 0)


def test_piecewise_system():
    sys = LinearSystem.piecewise([0.0, 1.0], [-np.eye(2), np.zeros((2, 2))])
    np.testing.assert_allclose(transition_matrix(sys, 0, 2, 1e-3), math.exp(-1) * np.eye(2), rtol=1e-10)
    # breakpoint off the step grid
    sys = LinearSystem.piecewise([0.0, 0.3337], [THREE_POSITIVE_A, -THREE_POSITIVE_A])
    expected = expm(-0.6663 * THREE_POSITIVE_A) @ expm(0.3337 * THREE_POSITIVE_A)
    np.testing.assert_allclose(transition_matrix(sys, 0, 1, 1e-3), expected, rtol=1e-8, atol=1e-8)
    tr = simulate(sys, THREE_POSITIVE_X0, 0, 1, 1e-2)
    assert 0.3337 in tr.times and np.all(np.diff(tr.times) > 0)
    np.testing.assert_allclose(tr.states[-1], expected @ THREE_POSITIVE_X0, rtol=1e-6)
    with pytest.raises(ValueError):
        LinearSystem.piecewise([1.0, 0.0], [np.eye(2), np.eye(2)])


def test_compound_flow_special_cases():
    sys = three_positive()
    Phi = transition_matrix(sys, 0, 1, 1e-3)
    np.testing.assert_allclose(compound_flow(sys, 1, 0, 1, 1e-3), Phi, rtol=1e-12)
    # k = n: scalar flow of the trace
    Y = compound_flow(sys, 4, 0, 1, 1e-3)
    assert Y[0, 0] == pytest.approx(math.exp(np.trace(THREE_POSITIVE_A)), rel=1e-8)
    with pytest.raises(ValueError):
        compound_flow(sys, 5, 0, 1)


def test_compound_flow_matches_compound_of_flow():
    sys = three_positive()
    for k in (2, 3):
        Y = compound_flow(sys, k, 0, 0.7, 1e-3)
        np.testing.assert_allclose(Y, mult_compound(expm(0.7 * THREE_POSITIVE_A), k), rtol=1e-7, atol=1e-7)
    assert np.all(compound_flow(sys, 3, 0, 0.7, 1e-3) >= 0)
    assert np.any(transition_matrix(sys, 0, 0.7, 1e-3) < 0)


def test_simulate():
    tr = simulate(LinearSystem.constant([[-1.0]]), [2.0], 0, 1, 1e-3)
    assert tr.states[-1, 0] == pytest.approx(2 * math.exp(-1), rel=1e-11)
    assert tr.times[0] == 0 and tr.times[-1] == 1 and len(tr) == 1001
    tr = simulate(LinearSystem.constant(np.zeros((2, 2))), [1.0, -1.0], 0, 0.3, 0.07)
    assert tr.times[-1] == 0.3
    np.testing.assert_array_equal(tr.states, np.tile([1.0, -1.0], (len(tr), 1)))
    with pytest.raises(ValueError):
        simulate(three_positive(), [1.0, 2.0], 0, 1)
    with pytest.raises(ValueError):
        simulate(cyclic_feedback(), [-1.0, 1.0, 1.0], 0, 1)


def test_blow_up_is_reported():
    sys = scalar_nonlinear(n=2)

    def f(t, x):
        with np.errstate(over="ignore", invalid="ignore"):
            return x**2

    quad = type(sys)(f, lambda t, x: np.diag(2 * x), [-1e9, -1e9], [1e9, 1e9])
    with pytest.raises(BlowUpError) as info:
        simulate(quad, [1.0, 1.0], 0, 5, 0.01)
    assert 0.9 < info.value.last_time < 1.1


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([0, 0], [[1.0], [1.0]])
    with pytest.raises(ValueError):
        Trajectory([0, 1], [[1.0]])


def test_three_positive_cone_sequence():
    tr = simulate(three_positive(), THREE_POSITIVE_X0, 0, 2.5)
    trace = signvar_trace(tr)
    assert trace.s_minus.max() <= 2
    assert np.any(np.diff(trace.s_minus) < 0) and np.any(np.diff(trace.s_minus) > 0)
    seq = [lab for lab in trace.cone_sequence()]
    assert seq == [
        ConeLabel(3, (1, 3, 4), 1),
        ConeLabel(3, (2, 3, 4), 1),
        ConeLabel(1, (4,), 1),
        ConeLabel(3, (1, 2, 4), 1),
        ConeLabel(2, (2, 4), -1),
    ]
    assert len(trace.rows()) == len(tr)


def test_monotone_chain_tridiagonal():
    A = -np.eye(4) + np.diag([1.0, 0.5, 2.0], 1) + np.diag([0.3, 1.0, 1.0], -1)
    tr = simulate(LinearSystem.constant(A), [1.0, -1.0, 1.0, -1.0], 0, 5)
    rep = monotone_chain_check(tr, 4)
    assert rep.ok and rep.terminal_in_V and rep.strict_drops <= 3


def test_monotone_chain_equilibrium_and_violation():
    tr = Trajectory([0.0, 1.0], [[1.0, 2.0], [1.0, 2.0]])
    rep = monotone_chain_check(tr, 1)
    assert rep.ok and rep.strict_drops == 0
    bad = Trajectory([0.0, 1.0, 2.0], [[1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 0.0, 1.0]])
    rep = monotone_chain_check(bad, 1)
    assert not rep.ok and any("s_plus" in v for v in rep.violations)
    assert not rep.terminal_in_V


def test_variational_matrix():
    sys = three_positive()
    np.testing.assert_allclose(variational_matrix(sys, np.ones(4), np.zeros(4)), THREE_POSITIVE_A, atol=1e-14)

    sq = type(scalar_nonlinear(n=1))(lambda t, x: x**2, lambda t, x: np.diag(2 * x), [-5.0], [5.0])
    # exact for the polynomial: (p^2 - q^2) / (p - q) = p + q
    assert variational_matrix(sq, [3.0], [1.0])[0, 0] == pytest.approx(4.0, rel=1e-13)
    with pytest.raises(ValueError):
        variational_matrix(sq, [1.0], [0.0], nodes=1)


def test_variational_matrix_is_coupling_times_secants():
    sys = scalar_nonlinear()
    C = sys.jacobian(0, np.zeros(4))
    rng = np.random.default_rng(3)
    for _ in range(10):
        p, q = rng.uniform(-2, 2, (2, 4))
        gains = [secant_gain(np.tanh, lambda u: 1 / np.cosh(u) ** 2, a, b) for a, b in zip(p, q)]
        M = variational_matrix(sys, p, q, nodes=16)
        np.testing.assert_allclose(M, C * np.array(gains)[None, :], rtol=1e-6)
        np.testing.assert_allclose(M @ (p - q), sys.vector_field(0, p) - sys.vector_field(0, q), atol=1e-6)


def test_secant_gain():
    assert secant_gain(lambda u: u**2, lambda u: 2 * u, 5.0, 2.0) == pytest.approx(7.0)
    assert secant_gain(lambda u: u**3, lambda u: 3 * u**2, 1.0, 1.0) == pytest.approx(3.0)
    g = secant_gain(np.tanh, lambda u: 1 / np.cosh(u) ** 2, 0.5, 0.5 + 1e-12)
    assert g == pytest.approx(1 / np.cosh(0.5) ** 2, rel=1e-10)


def test_certify_k_cooperative_cyclic():
    act = certify_k_cooperative(cyclic_feedback(delta=1), 1, per_axis=6)
    assert act.cooperative
    rep = certify_k_cooperative(cyclic_feedback(delta=-1), 1, per_axis=6)
    assert not rep.cooperative and rep.witness["row"] == 1 and rep.witness["col"] == 3
    assert certify_k_cooperative(cyclic_feedback(delta=-1), 2, per_axis=6).cooperative
    assert rep.to_cert_report(3).verdicts[1] == "not_k_positive"


def test_certify_k_cooperative_all_k():
    lin = type(scalar_nonlinear(n=3))(lambda t, x: -x, lambda t, x: -np.eye(3), -np.ones(3), np.ones(3))
    for k in (1, 2):
        rep = certify_k_cooperative(lin, k, per_axis=3)
        assert rep.cooperative and not rep.strong_candidate
    # the top compound is the nonzero 1x1 matrix [-3]
    assert certify_k_cooperative(lin, 3, per_axis=3).strong_candidate
    sn = scalar_nonlinear()
    for k in range(1, 5):
        rep = certify_k_cooperative(sn, k, per_axis=4)
        assert rep.cooperative and rep.strong_candidate
    with pytest.raises(ValueError):
        certify_k_cooperative(sn, 1, grid=np.empty((0, 4)))


def test_invariance_check():
    sys = three_positive()
    rng = np.random.default_rng(4)
    pairs = [(THREE_POSITIVE_X0 + rng.normal(0, 0.1, 4), THREE_POSITIVE_X0) for _ in range(10)]
    pairs.append((THREE_POSITIVE_X0, THREE_POSITIVE_X0))
    rep = invariance_check(sys, 3, pairs, 1.0)
    assert rep.ok and 10 not in rep.skipped

    # flipping a21 leaves M^3_4, and some difference gains a third variation
    B = THREE_POSITIVE_A.copy()
    B[1, 0] = -3.0
    rng = np.random.default_rng(0)
    pairs = [(rng.normal(size=4), np.zeros(4)) for _ in range(200)]
    rep = invariance_check(LinearSystem.constant(B), 3, pairs, 1.0, step=1e-3)
    assert not rep.ok and rep.violations[0]["s_minus"] == 3
    assert rep.skipped


def test_omega_limit_equilibrium():
    factory, x0, t1, step = PRESETS["stable_linear"]
    tr = simulate(factory(), x0, 0, t1, step)
    v = classify_omega_limit(tr, factory())
    assert v.kind == "Equilibrium"
    np.testing.assert_allclose(v.point, 0, atol=1e-6)
    still = Trajectory(np.linspace(0, 1, 20), np.tile([1.0, 2.0], (20, 1)))
    assert classify_omega_limit(still).kind == "Equilibrium"


def test_omega_limit_closed_orbit():
    factory, x0, t1, step = PRESETS["oscillator"]
    sys = factory()
    v = classify_omega_limit(simulate(sys, x0, 0, t1, step), sys)
    assert v.kind == "ClosedOrbit"
    assert v.period == pytest.approx(3.6968, rel=1e-3)
    assert v.diagnostics["velocity_in_P2"]
    d = v.to_dict()
    assert d["kind"] == "ClosedOrbit" and "period" in d


def test_omega_limit_unknown():
    tr = Trajectory([0.0, 1.0, 2.0], np.zeros((3, 2)))
    v = classify_omega_limit(tr)
    assert v.kind == "Unknown" and v.diagnostics["reason"] == "insufficient samples"
    t = np.linspace(0, 10, 200)
    drift = Trajectory(t, np.column_stack([t, t**2]))
    assert classify_omega_limit(drift).kind == "Unknown"


def test_project_to_plane():
    t = np.linspace(0, 2 * np.pi, 50)
    e1, e2 = np.array([1.0, 1, 0]) / math.sqrt(2), np.array([0.0, 0, 1])
    states = np.outer(np.cos(t), e1) + np.outer(np.sin(t), e2)
    xy = project_to_plane(Trajectory(t, states), [e1, e2])
    np.testing.assert_allclose(xy, np.column_stack([np.cos(t), np.sin(t)]), atol=1e-12)
    with pytest.raises(ValueError):
        project_to_plane(Trajectory(t, states), [e1, 2 * e1])

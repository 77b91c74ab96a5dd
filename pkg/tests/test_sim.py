import json

import numpy as np
import pytest

from reset_verdict.elements import gfore, pci
from reset_verdict.errors import ImproperTransferFunction, ZenoDetected
from reset_verdict.lti import RationalTF, base_linear_closed_loop_stable
from reset_verdict.sim import (
    SimOptions,
    Signal,
    assemble,
    assemble_system,
    boundedness_check,
    fixed_step_first_reset,
    linear_reference,
    propagate_exact,
    reference_trace,
    simulate,
    steady_state,
    step,
    step_response,
)
from reset_verdict.system import DEMO_TUNING, demo_system

LOWPASS = RationalTF((1.0,), (1.0, 1.0))


def solver_norm(opts, x_prev, x_pred, x_rec):
    """Residual in the integrator's own weighted RMS norm (<= 1 is within tolerance)."""
    scale = opts.atol + opts.rtol * np.maximum(np.abs(x_prev), np.abs(x_pred))
    return float(np.sqrt(np.mean(((x_pred - x_rec) / scale) ** 2)))


@pytest.fixture(scope="module")
def c1_trace():
    return step_response(assemble_system(demo_system("C1")), 0.3)


def test_assemble_gfore_by_hand():
    cl = assemble(gfore(1.0, 0.3), LOWPASS)
    assert np.array_equal(cl.A, [[-1.0, -1.0], [1.0, -1.0]])
    assert np.array_equal(cl.B, [1.0, 0.0])
    assert np.array_equal(cl.C, [0.0, 1.0])
    assert np.array_equal(cl.A_rho, np.diag([0.3, 1.0]))


def test_assemble_pci_by_hand():
    cl = assemble(pci(1.0), LOWPASS)
    assert np.array_equal(cl.A, [[0.0, -1.0], [1.0, -2.0]])
    assert np.array_equal(cl.B, [1.0, 1.0])


def test_assemble_rejects_biproper_loop():
    with pytest.raises(ImproperTransferFunction):
        assemble(gfore(1.0), RationalTF((1.0, 1.0), (2.0, 1.0)))


def test_assemble_disturbance_default_and_override():
    cl = assemble(gfore(1.0), LOWPASS)
    assert np.array_equal(cl.Bd, [0.0, 1.0])
    cl = assemble(gfore(1.0), LOWPASS, B_d=[2.0])
    assert np.array_equal(cl.Bd, [0.0, 2.0])


@pytest.mark.parametrize("name", sorted(DEMO_TUNING))
def test_demo_closed_loop_hurwitz(name):
    sysd = demo_system(name)
    cl = assemble_system(sysd)
    assert cl.order == 7
    eig = np.linalg.eigvals(cl.A)
    assert np.all(eig.real < 0)
    assert base_linear_closed_loop_stable(sysd.open_loop)


def test_closed_loop_matches_transfer_function():
    # y/r of the jump-free loop equals L/(1+L)
    from reset_verdict.lti import tf_eval

    sysd = demo_system("C2")
    cl = assemble_system(sysd)
    L = tf_eval(sysd.open_loop, np.logspace(0, 4, 25))
    w = np.logspace(0, 4, 25)
    T = np.array([cl.C @ np.linalg.solve(1j * wi * np.eye(cl.order) - cl.A, cl.B) for wi in w])
    assert np.allclose(T, L / (1 + L), rtol=1e-9)


# ------------------------------------------------------------ step responses

def test_c1_step_response(c1_trace):
    tr = c1_trace
    assert np.all(np.diff(tr.times) > 0)
    assert len(tr.reset_instants) >= 1
    assert max(abs(e) for e in tr.reset_errors) < 1e-8
    assert abs(tr.y[-1] - 1) < 0.02
    ss = np.linalg.norm(steady_state(assemble_system(demo_system("C1"))))
    assert boundedness_check(tr, 100 * ss)


def test_resets_at_sign_changes(c1_trace):
    tr = c1_trace
    # between consecutive resets the error keeps one sign
    edges = [0.0] + tr.reset_instants + [tr.times[-1] + 1]
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (tr.times > a) & (tr.times < b)
        e = tr.e[sel]
        e = e[np.abs(e) > 1e-9]
        assert np.all(e > 0) or np.all(e < 0)


def test_jump_only_scales_reset_state():
    for gamma in (0.0, 0.4, -0.5):
        cl = assemble_system(demo_system("C3").with_gamma(gamma))
        tr = step_response(cl, 0.05)
        assert tr.jumps
        for _, before, after in tr.jumps:
            assert after[0] == gamma * before[0]
            assert np.array_equal(after[1:], before[1:])
            assert abs(after[0]) <= abs(before[0])


def test_first_reset_against_fixed_step_reference():
    cl = assemble_system(demo_system("C1"))
    tr = step_response(cl, 0.02)
    h = 0.02 / (10 * tr.metadata["n_steps"])  # 10x finer than the mean adaptive step
    ref = fixed_step_first_reset(cl, step(), h, 0.02)
    assert ref is not None
    assert abs(tr.reset_instants[0] - ref) < 1e-5


def test_first_reset_is_first_linear_zero():
    # the flow before the first reset is the linear one, so the exact
    # matrix-exponential trajectory must have its first error zero there
    cl = assemble_system(demo_system("C4"))
    t1 = step_response(cl, 0.01).reset_instants[0]
    e = lambda t: 1.0 - cl.C @ propagate_exact(cl, np.zeros(cl.order), t, 1.0)
    assert e(t1 * (1 - 1e-6)) * e(t1 * (1 + 1e-6)) < 0
    ts = np.linspace(0, t1 * (1 - 1e-6), 500)[1:]
    assert all(e(t) > 0 for t in ts)


@pytest.mark.parametrize("name", sorted(DEMO_TUNING))
def test_gamma_one_matches_linear_reference(name):
    cl = assemble_system(demo_system(name)).with_gamma(1.0)
    tr = step_response(cl, 0.2)
    ref = linear_reference(cl, step(), tr.times)
    assert np.max(np.abs(tr.states - ref)) / np.max(np.abs(ref)) < 1e-6


def test_segment_residual_against_matrix_exponential(c1_trace):
    tr = c1_trace
    cl = assemble_system(demo_system("C1"))
    rng = np.random.default_rng(3)
    idx = np.flatnonzero((tr.segment[1:] == tr.segment[:-1]) & ~tr.reset_flag[:-1])
    opts = SimOptions()
    for i in rng.choice(idx, 200, replace=False):
        x_pred = propagate_exact(cl, tr.states[i], tr.times[i + 1] - tr.times[i], 1.0)
        assert solver_norm(opts, tr.states[i], x_pred, tr.states[i + 1]) <= 1.0


def test_gamma_changes_transient():
    y = {}
    for g in (0.0, 0.4, 0.8):
        cl = assemble_system(demo_system("C3").with_gamma(g))
        tr = step_response(cl, 0.03)
        y[g] = tr.y[~tr.reset_flag]
    assert np.max(np.abs(y[0.0] - y[0.4])) > 1e-3
    assert np.max(np.abs(y[0.4] - y[0.8])) > 1e-3


def test_zero_input_zero_state_stays_zero():
    cl = assemble_system(demo_system("C1"))
    tr = simulate(cl, Signal(), Signal(), 0.01)
    assert np.all(tr.states == 0)
    assert not tr.reset_instants
    assert boundedness_check(tr, 0.0)


def test_unstable_linear_loop_unbounded():
    # 0.5/(s-1) behind a unit-corner low-pass closes to s^2 - 0.5
    cl = assemble(gfore(1.0, 1.0), RationalTF((0.5,), (-1.0, 1.0)))
    assert np.max(np.linalg.eigvals(cl.A).real) > 0
    tr = step_response(cl, 20.0)
    assert not boundedness_check(tr, 1e3)


def test_piecewise_inputs_and_disturbance():
    cl = assemble_system(demo_system("C2"))
    r = Signal("pwc", times=(0.0, 0.02), values=(1.0, -0.5))
    d = step(0.2, 0.01)
    tr = simulate(cl, r, d, 0.05)
    assert np.all(np.diff(tr.times) > 0)
    assert max(abs(e) for e in tr.reset_errors) < 1e-8
    lin = cl.with_gamma(1.0)
    tr1 = simulate(lin, r, d, 0.05)
    ref = linear_reference(lin, r, tr1.times, d)
    assert np.max(np.abs(tr1.states - ref)) / np.max(np.abs(ref)) < 1e-6


def test_sine_input_resets():
    cl = assemble_system(demo_system("C5"))
    tr = simulate(cl, Signal("sine", 1.0, frequency=2 * np.pi * 50), Signal(), 0.05)
    assert len(tr.reset_instants) >= 4
    assert max(abs(e) for e in tr.reset_errors) < 1e-8
    # e(0) = 0 exactly: the start is treated as inside the leave band
    assert tr.metadata["sliding_events"] >= 1


def test_ramp_input_keeps_positive_error():
    # a single integrator leaves a constant velocity error, so e never crosses zero
    cl = assemble_system(demo_system("C5"))
    tr = simulate(cl, Signal("ramp", 1.0), Signal(), 0.05)
    assert not tr.reset_instants
    assert np.all(tr.e[1:] > 0)


def test_zeno_cap():
    cl = assemble_system(demo_system("C1"))
    with pytest.raises(ZenoDetected):
        simulate(cl, Signal("sine", 1.0, frequency=2 * np.pi * 200), Signal(), 0.05,
                 SimOptions(max_jumps=3))


def test_signals():
    assert step()(0.0) == 1.0 and step(2.0, 1.0)(0.5) == 0.0
    assert Signal("ramp", 2.0, t0=1.0)(3.0) == 4.0
    pw = Signal("pwc", times=(1.0, 2.0), values=(3.0, 4.0))
    assert [pw(t) for t in (0.5, 1.0, 1.5, 2.5)] == [0.0, 3.0, 3.0, 4.0]
    assert pw.breakpoints(10) == [1.0, 2.0]
    with pytest.raises(ValueError):
        Signal("square")


def test_trace_serialisation(c1_trace):
    csv = c1_trace.to_csv().splitlines()
    assert csv[0] == "t,y,e,u_r,x_r,reset"
    assert len(csv) == c1_trace.times.size + 1
    assert sum(int(line.rsplit(",", 1)[1]) for line in csv[1:]) == len(c1_trace.reset_instants)
    data = json.loads(c1_trace.to_json())
    assert data["metadata"]["options"]["dwell"] == 1e-7
    assert data["metadata"]["leave_band"] == pytest.approx(2e-9)
    assert len(data["reset_instants"]) == len(c1_trace.reset_instants)


def test_deterministic():
    cl = assemble_system(demo_system("C2"))
    a = step_response(cl, 0.02).to_csv()
    b = step_response(cl, 0.02).to_csv()
    assert a == b


def test_reference_trace_matches_simulation():
    cl = assemble_system(demo_system("C5")).with_gamma(1.0)
    ref = reference_trace(cl, step(), 0.05)
    sim_tr = step_response(cl, 0.05)
    common = np.isin(sim_tr.times, ref.times)
    assert np.allclose(sim_tr.y[common], ref.y, atol=1e-6 * np.max(np.abs(ref.y)))

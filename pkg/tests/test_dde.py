import math

import numpy as np
import pytest

from wgqed.analytic import SingleModeParams, series_solution
from wgqed.dde import DelaySystem, HistoryBuffer, history_eval, integrate, refine_until
from wgqed.errors import ConvergenceError, DivergedError, DomainError, QueryAheadError
from wgqed.presets import preset
from wgqed.scenarios import build_bare_system

B0 = np.array([1.0, -1.0]) / math.sqrt(2)


def test_zero_delay_terms_fold_into_A0():
    A0 = np.diag([-1.0, -2.0])
    Am = np.array([[0.0, 0.5], [0.5, 0.0]])
    sys = DelaySystem(A0, [(0.0, Am), (1.5, Am)])
    assert np.allclose(sys.A0, A0 + Am)
    assert len(sys.delayed) == 1 and sys.min_delay == 1.5
    with pytest.raises(DomainError):
        DelaySystem(A0, [(-1.0, Am)])
    with pytest.raises(DomainError):
        DelaySystem(A0, [(1.0, np.eye(3))])


def test_delay_free_matches_exponential():
    xi = (0.3 + 1.0j, -0.7 + 0.4j)
    sys = DelaySystem(np.diag([1j * xi[0], 1j * xi[1]]))
    traj = integrate(sys, (0.6, 0.8j), 10.0, 0.005)
    exact = np.stack([0.6 * np.exp(1j * xi[0] * traj.times), 0.8j * np.exp(1j * xi[1] * traj.times)], axis=1)
    assert np.max(np.abs(traj.states - exact)) < 1e-10
    assert traj.states[0].tolist() == [0.6, 0.8j]


def test_inactive_delay_is_identical_to_no_delay():
    A0 = np.array([[-1 - 2j, 0.3], [0.1j, -0.5 + 1j]])
    Am = np.array([[0.2, -0.9], [0.4j, 0.1]])
    with_delay = integrate(DelaySystem(A0, [(5.0, Am)]), B0, 4.9, 0.01)
    without = integrate(DelaySystem(A0), B0, 4.9, 0.01)
    assert np.array_equal(with_delay.states, without.states)


def test_fig2b_against_series():
    spec = preset("fig2b", delta="2*gamma1")
    mode = spec.modes[0]
    sys = build_bare_system(spec.modes, spec.delta)
    t_end = 6 * mode.tau
    traj = integrate(sys, B0, t_end, mode.tau / 2000)
    idx = np.linspace(0, len(traj) - 1, 60).round().astype(int)
    ser = series_solution(SingleModeParams.from_mode(mode, spec.delta), B0, traj.times[idx])
    assert np.max(np.abs(ser - traj.states[idx])) < 1e-6


def _exp_buffer(omega, dt, n):
    buf = HistoryBuffer(dt, 1, n)
    t = np.arange(n + 1) * dt
    x = np.exp(1j * omega * t)
    buf.states[:, 0] = x
    buf.d_start[:, 0] = 1j * omega * x[:-1]
    buf.d_end[:, 0] = 1j * omega * x[1:]
    buf.n_current = n
    return buf


def test_hermite_interpolation_accuracy():
    omega, dt, n = 2.0, 0.005, 400  # |omega| dt = 0.01
    buf = _exp_buffer(omega, dt, n)
    t = np.random.default_rng(3).uniform(0, n * dt, 2000)
    got = buf.eval_units(t / dt)[:, 0]
    assert np.max(np.abs(got - np.exp(1j * omega * t))) < 1e-9


def test_history_nodes_prehistory_and_lookahead():
    buf = _exp_buffer(1.3, 0.1, 50)
    for i in (0, 7, 50):
        assert np.array_equal(history_eval(buf, i * 0.1), buf.states[i])
    assert np.array_equal(history_eval(buf, -0.05), np.zeros(1))
    with pytest.raises(QueryAheadError):
        history_eval(buf, 5.2)


def test_history_continuity():
    buf = _exp_buffer(3.0, 0.02, 100)
    for i in (1, 17, 99):
        left = buf.eval_units(np.array([i - 1e-6]))[0]
        right = buf.eval_units(np.array([i + 1e-6]))[0]
        assert abs(left - right)[0] < 1e-6


def test_trajectory_dense_output_and_transform():
    sys = DelaySystem(np.diag([-1.0, -2j]), [(0.5, np.array([[0, 0.3], [0.3, 0]]))])
    traj = integrate(sys, B0, 2.0, 0.01)
    assert np.allclose(traj.at(traj.times[:5]), traj.states[:5], atol=0, rtol=0)
    swap = traj.transformed(np.array([[0, 1], [1, 0]]), basis="swapped")
    assert np.array_equal(swap.states[:, 0], traj.states[:, 1])
    assert swap.meta["basis"] == "swapped"
    assert np.all(np.diff(traj.times) > 0)


def test_preconditions():
    sys = DelaySystem(np.eye(2), [(0.1, np.eye(2))])
    with pytest.raises(DomainError):
        integrate(sys, B0, 1.0, 0.2)
    with pytest.raises(DomainError):
        integrate(sys, B0, 1.0, 0.0)
    with pytest.raises(DomainError):
        integrate(sys, B0, -1.0, 0.01)


def test_divergence_reports_time():
    sys = DelaySystem(np.diag([1e200, 0.0]))
    with np.errstate(all="ignore"), pytest.raises(DivergedError) as info:
        integrate(sys, B0, 1.0, 0.5)
    assert info.value.t > 0


def test_zero_matrices_keep_state():
    sys = DelaySystem(np.zeros((2, 2)), [(0.3, np.zeros((2, 2)))])
    traj = integrate(sys, (0.6, 0.8j), 3.0, 0.01)
    assert np.all(traj.states == np.array([0.6, 0.8j]))


def test_causality_bit_identical():
    A0 = np.array([[-1 - 1j, 0.2], [0.0, -0.3 + 2j]])
    sys = DelaySystem(A0, [(0.7, np.array([[0, -0.5], [-0.5, 0]])), (1.1, np.eye(2))])
    base = integrate(sys, B0, 3.0, 0.01)
    changed = integrate(sys.with_matrix(1, np.array([[3.0, 1j], [2.0, -1.0]])), B0, 3.0, 0.01)
    early = base.times < 1.1 - 1e-12
    assert np.array_equal(base.states[early], changed.states[early])
    assert not np.array_equal(base.states, changed.states)


def test_linearity():
    rng = np.random.default_rng(11)
    A0 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) - 2 * np.eye(2)
    sys = DelaySystem(A0, [(0.37, rng.normal(size=(2, 2))), (0.61, 1j * rng.normal(size=(2, 2)))])
    x, y = np.array([1.0, 0.5j]), np.array([-0.3, 2.0])
    a, b = 0.7 - 0.2j, 1.5j
    tx, ty = integrate(sys, x, 3.0, 0.01), integrate(sys, y, 3.0, 0.01)
    tz = integrate(sys, a * x + b * y, 3.0, 0.01)
    assert np.max(np.abs(tz.states - (a * tx.states + b * ty.states))) < 1e-12


def test_refine_until_smooth_problem():
    A0 = np.array([[-1 + 10j, 0.5], [0.3, -0.5 - 8j]])
    sys = DelaySystem(A0)
    traj = refine_until(sys, B0, 10.0, 1e-8, dt0=0.01)  # dt0 = tau/100 for tau = 1
    assert 3 <= traj.meta["refinements"] <= 6
    assert traj.meta["refinement_error"] < 1e-8


def test_refine_until_infinite_tolerance_and_failure():
    sys = DelaySystem(np.diag([-1.0, -1j]), [(1.0, np.eye(2) * 0.1)])
    first = refine_until(sys, B0, 3.0, math.inf)
    assert first.dt == pytest.approx(0.01)
    assert first.meta["refinements"] == 0
    with pytest.raises(ConvergenceError):
        refine_until(sys, B0, 3.0, 1e-30, max_halvings=2)
    with pytest.raises(DomainError):
        refine_until(sys, B0, 3.0, 0.0)


def _observed_order(sys, t_max, dt):
    runs = [integrate(sys, B0, t_max, dt / 2 ** k).states for k in range(3)]
    e1 = np.max(np.abs(runs[1][::2] - runs[0]))
    e2 = np.max(np.abs(runs[2][::2] - runs[1]))
    return math.log2(e1 / e2)


def test_fourth_order_without_delays():
    sys = DelaySystem(np.array([[-0.5 + 3j, 1.0], [-0.4, -1 - 2j]]))
    assert _observed_order(sys, 5.0, 0.02) > 3.8


def test_order_with_incommensurate_delays():
    sys = DelaySystem(
        np.array([[-1 - 0.5j, 0], [0, -1 + 0.5j]]),
        [(1.0, np.array([[0, -0.8], [-0.8, 0]])), (math.sqrt(2), np.array([[0, 0.3j], [0.3j, 0]]))],
    )
    assert _observed_order(sys, 6.0, 0.02) >= 2.0
    # away from the first derivative jumps (t < 1) the order is at least 3
    assert _observed_order(sys, 0.9, 0.02) >= 3.0


def test_off_grid_switch_on_matches_exact_segment():
    # B1' = -B1 - 0.8 B2(t - tau) with tau off the grid; exact on [tau, 2 tau)
    tau = 0.5 * math.sqrt(2)
    sys = DelaySystem(np.diag([-1.0, -2.0]).astype(complex), [(tau, np.array([[0, -0.8], [0, 0]]))])
    traj = integrate(sys, (1.0, 1.0), 1.4, 0.01)
    t = traj.times
    s = np.clip(t - tau, 0, None)
    # B2(t - tau) = exp(-2 (t - tau)), so the delayed drive integrates in closed form
    exact = np.exp(-t) - 0.8 * (np.exp(-s) - np.exp(-2 * s)) * (t >= tau)
    assert np.max(np.abs(traj.states[:, 0] - exact)) < 1e-9

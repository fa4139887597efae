import cmath
import dataclasses
import math

import numpy as np
import pytest

from wgqed.analytic import markov_solution
from wgqed.dde import integrate
from wgqed.errors import BasisUnavailableError, DomainError
from wgqed.presets import preset
from wgqed.scenarios import (
    BARE_TO_SA,
    ScenarioSpec,
    bare_to_sa,
    build_bare_system,
    build_sa_system,
    choose_dt,
    oscillation_strength,
    run_scenario,
    sa_to_bare,
)
from wgqed.validation import synthetic_mode

S = 1 / math.sqrt(2)


def test_bare_system_single_mode():
    m = synthetic_mode(0.8, 2.0, 0.3, gamma_l1=0.5, gamma_l2=1.28)
    sys = build_bare_system([m], 0.4)
    xi1, xi2 = complex(-0.4, 0.5), complex(0.4, 1.28)
    assert np.allclose(sys.A0, np.diag([1j * xi1, 1j * xi2]))
    (tau, Am), = sys.delayed
    assert tau == 2.0
    assert np.allclose(Am, [[0, -m.alpha], [-m.alpha, 0]])


def test_bare_system_zero_separation_folds():
    m = synthetic_mode(1.5, 0.0, 0.0)
    sys = build_bare_system([m], 0.25)
    G = 1.5
    assert np.allclose(sys.A0, [[-G - 0.25j, -G], [-G, -G + 0.25j]])
    assert sys.delayed == ()


def test_bare_system_two_modes_and_overrides():
    modes = [synthetic_mode(1.0, 1.0, 0.5), dataclasses.replace(synthetic_mode(2.0, 1.5, 2.0))]
    sys = build_bare_system(modes, 0.0, Gamma1=7.0)
    assert sys.A0[0, 0] == -7.0 and sys.A0[1, 1] == -3.0
    assert [tau for tau, _ in sys.delayed] == [1.0, 1.5]
    assert sys.delayed[1][1][0, 1] == pytest.approx(-modes[1].alpha)
    with pytest.raises(DomainError):
        build_bare_system([], 0.0)


def test_sa_system():
    m = synthetic_mode(1.0, 1.0, 0.7)
    sys = build_sa_system([m], 0.3)
    assert np.allclose(sys.A0, [[-1, -0.3j], [-0.3j, -1]])
    assert np.allclose(sys.delayed[0][1], np.diag([-m.alpha, m.alpha]))
    with pytest.raises(BasisUnavailableError):
        build_sa_system([synthetic_mode(1.0, 1.0, 0.0, gamma_l1=0.5, gamma_l2=2.0)], 0.0)


def test_sa_markov_two_mode_rates():
    # phi1 = 0 and zero delays: |a> rate gamma2 - Re alpha2, |s> rate 2 gamma1 + gamma2 + Re alpha2
    g1, g2, phi2 = 1.0, 3.0, 0.9
    modes = [synthetic_mode(g1, 0.0, 0.0), synthetic_mode(g2, 0.0, phi2)]
    a2 = modes[1].alpha
    A = build_sa_system(modes, 0.0).A0
    assert -A[1, 1].real == pytest.approx(g2 - a2.real)
    assert -A[0, 0].real == pytest.approx(2 * g1 + g2 + a2.real)
    assert (A[1, 1] - A[0, 0]).imag == pytest.approx(2 * a2.imag)


def test_basis_transforms():
    assert np.allclose(bare_to_sa([1, 0]), [S, S])
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
    assert np.max(np.abs(sa_to_bare(bare_to_sa(x)) - x)) < 1e-15
    assert np.allclose(np.sum(np.abs(bare_to_sa(x)) ** 2, axis=1), np.sum(np.abs(x) ** 2, axis=1))
    assert np.allclose(BARE_TO_SA @ BARE_TO_SA, np.eye(2))


def test_oscillation_strength():
    assert oscillation_strength(0.7) == 0.7
    assert oscillation_strength(0.7, 2.0 + 0j) == pytest.approx(0.7)
    assert oscillation_strength(0.0, 2.0j) == pytest.approx(2.0)
    assert oscillation_strength(3.0, 1.0 + 4.0j) == pytest.approx(5.0)


def test_choose_dt_aligned_to_delay():
    m = synthetic_mode(1.0, 1.7, 0.0)
    sys = build_bare_system([m], 2.0)
    dt = choose_dt(sys, 10.0)
    steps = 1.7 / dt
    assert abs(steps - round(steps)) < 1e-9
    assert dt * (abs(-1 - 2j) + 1.0) <= 0.005 * (1 + 1e-12)


def test_spec_validation():
    m = synthetic_mode(1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        ScenarioSpec(modes=(), t_max=1.0)
    with pytest.raises(DomainError):
        ScenarioSpec(modes=(m,), t_max=0.0)
    with pytest.raises(DomainError):
        ScenarioSpec(modes=(m,), t_max=1.0, basis="xyz")
    with pytest.raises(DomainError):
        ScenarioSpec(modes=(m,), t_max=1.0, initial=(1.0, 1.0))
    with pytest.raises(DomainError):
        ScenarioSpec(modes=(m,), t_max=1.0, initial="up")
    spec = ScenarioSpec(modes=(m,), t_max=1.0, initial=(0.0, 1.0), initial_basis="sa")
    assert np.allclose(spec.initial_bare(), [S, -S])
    assert np.allclose(ScenarioSpec(modes=(m,), t_max=1.0, initial="|s>").initial_bare(), [S, S])


def test_run_scenario_metadata():
    res = run_scenario(preset("fig4c", delta="1.5*gamma1+2*gamma2", t_max="2*tau1"))
    meta = res.meta
    assert meta["gamma_tau"][0] == pytest.approx(0.253, rel=1e-9)
    assert meta["phi_mod_2pi"][0] == pytest.approx(0.0, abs=1e-9)
    a2 = res.spec.modes[1].alpha
    assert meta["Omega_osc"] == pytest.approx(math.hypot(res.spec.delta, a2.imag))
    assert meta["n_steps"] == len(res.bare) - 1
    assert np.allclose(res.sa.states, res.bare.states @ BARE_TO_SA.T)


def test_small_delay_plateau_value():
    # the delayed decay of |a> settles at C_a = 1/(1 + g tau), so C = |C_a|^2 = 1/(1 + g tau)^2
    res = run_scenario(preset("fig2a", delta=0.0))
    gt = res.meta["gamma1_tau1"]
    assert gt == pytest.approx(0.15)
    assert abs(res.sa.states[-1, 1]) == pytest.approx(1 / (1 + gt), rel=1e-4)
    assert res.observables.C[-1] == pytest.approx(1 / (1 + gt) ** 2, rel=1e-4)


def test_fig2c_decay_then_revival():
    res = run_scenario(preset("fig2c", delta=0.0))
    tau1 = res.spec.modes[0].tau
    t, C = res.observables.times, res.observables.C
    assert np.max(C[(t > 0.9 * tau1) & (t < tau1)]) < 1e-4
    assert np.max(C[(t > tau1) & (t < 1.2 * tau1)]) > 0.1


def test_two_mode_predelay_universality():
    spec = preset("fig4c", delta="5*(gamma1+gamma2)", t_max="0.99*tau1", initial="eg")
    res = run_scenario(spec)
    G = sum(m.gamma for m in spec.modes)
    ref = markov_solution((G, G), spec.delta, bare_to_sa(spec.initial_bare()), res.sa.times)
    assert np.max(np.abs(res.sa.states - ref)) < 1e-9


@pytest.mark.parametrize("name", ["fig2a", "fig4a"])
def test_dark_state_trapping(name):
    res = run_scenario(preset(name, n=0.0, t_max="30/Gamma"))
    assert np.max(np.abs(res.observables.C - 1)) < 1e-9


def test_basis_equivalence_and_label_swap():
    base = preset("fig4c", delta="1.5*gamma1+2*gamma2", t_max="3*tau1", dt="tau1/2000")
    bare = run_scenario(base)
    sa = run_scenario(dataclasses.replace(base, basis="sa"))
    assert np.max(np.abs(bare.observables.C - sa.observables.C)) < 1e-9
    swapped = run_scenario(dataclasses.replace(base, delta=-base.delta, initial=(-S, S)))
    assert np.max(np.abs(swapped.bare.states[:, ::-1] - bare.bare.states)) < 1e-12


def test_refinement_through_spec():
    spec = preset("fig2b", delta="gamma1", tol=1e-7, dt="tau1/50")
    res = run_scenario(spec)
    assert res.meta["refinements"] >= 1
    assert res.meta["refinement_error"] < 1e-7

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from wgqed.errors import (
    DomainError,
    EvanescentModeError,
    ModeDecoupledError,
    NoCoupledModesError,
)
from wgqed.waveguide import (
    TLSPair,
    TransverseMode,
    WaveguideSpec,
    coupling_strength,
    cutoff_frequency,
    dispersion,
    group_velocity,
    guided_modes,
    midband_frequency,
    mode_interaction_params,
    resonant_wavenumber,
    total_decay_rates,
)

GUIDE = WaveguideSpec()
W11 = math.pi * math.sqrt(1.25)
W31 = math.pi * math.sqrt(3.25)
W51 = math.pi * math.sqrt(7.25)
OMEGA_ONE = 0.5 * (W11 + W31)
OMEGA_TWO = 0.5 * (W31 + W51)


def test_cutoff_values():
    assert cutoff_frequency(GUIDE, 1, 1) == pytest.approx(3.51241, abs=5e-6)
    assert cutoff_frequency(GUIDE, 3, 1) == pytest.approx(5.66359, abs=5e-6)


def test_cutoff_homogeneous_on_square_guide():
    square = WaveguideSpec(a=1.3, b=1.3)
    for m in (1, 2, 5):
        assert cutoff_frequency(square, 2 * m, 2 * m) == pytest.approx(2 * cutoff_frequency(square, m, m), rel=1e-15)


@pytest.mark.parametrize("m,n", [(0, 1), (1, 0), (-1, 1)])
def test_cutoff_rejects_bad_indices(m, n):
    with pytest.raises(DomainError):
        cutoff_frequency(GUIDE, m, n)


@pytest.mark.parametrize("field", ["a", "b", "c"])
def test_guide_rejects_nonpositive(field):
    with pytest.raises(DomainError):
        WaveguideSpec(**{field: 0.0})


def test_dispersion_limits():
    assert dispersion(2.5, 0.0) == 2.5
    assert dispersion(0.0, 1.7) == pytest.approx(1.7)
    k0 = math.sqrt(4.58800 ** 2 - 3.51241 ** 2)
    assert dispersion(3.51241, k0) == pytest.approx(4.58800, rel=1e-14)


def test_resonant_wavenumber_matches_root_finder():
    # root of dispersion(Omega, k) = omega_A found independently
    k_root = brentq(lambda k: dispersion(W11, k) - OMEGA_ONE, 0.0, 10.0, xtol=1e-15)
    assert resonant_wavenumber(W11, OMEGA_ONE) == pytest.approx(k_root, rel=1e-13)
    # the example's 2.95059 is a rounding slip; the exact value is 2.95173
    assert resonant_wavenumber(W11, OMEGA_ONE) == pytest.approx(2.951730, abs=1e-6)


def test_group_velocity_values():
    assert group_velocity(0.0, 4.2) == pytest.approx(1.0)
    # numerical derivative d omega / d k at k0
    k0 = resonant_wavenumber(W11, OMEGA_ONE)
    h = 1e-6
    slope = (dispersion(W11, k0 + h) - dispersion(W11, k0 - h)) / (2 * h)
    assert group_velocity(W11, OMEGA_ONE) == pytest.approx(slope, rel=1e-9)
    assert group_velocity(W11, OMEGA_ONE) == pytest.approx(0.643359, abs=1e-6)


def test_evanescent_modes_rejected():
    with pytest.raises(EvanescentModeError):
        resonant_wavenumber(3.0, 3.0)
    with pytest.raises(EvanescentModeError):
        group_velocity(4.0, 3.0)
    assert resonant_wavenumber(0.0, 2.5) == 2.5


def test_round_trip_and_identity_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        Omega = rng.uniform(0.0, 10.0)
        omega_A = Omega * (1 + rng.uniform(1e-3, 3.0)) + 1e-3
        c = rng.uniform(0.5, 2.0)
        k0 = resonant_wavenumber(Omega, omega_A, c)
        assert dispersion(Omega, k0, c) == pytest.approx(omega_A, rel=1e-12)
        v = group_velocity(Omega, omega_A, c)
        assert 0 < v < c
        assert v * omega_A == pytest.approx(c * c * k0, rel=1e-12)


def test_coupling_signs():
    unit = 1 / math.sqrt(GUIDE.area * math.pi)
    assert coupling_strength(GUIDE, (1, 1), 1.0) == pytest.approx(W11 * unit)
    assert coupling_strength(GUIDE, TransverseMode(3, 1), 1.0) == pytest.approx(-W31 * unit)
    assert coupling_strength(GUIDE, (3, 3), 1.0) > 0
    with pytest.raises(ModeDecoupledError):
        coupling_strength(GUIDE, (2, 1), 1.0)


def test_mode_ordering_is_computed():
    modes = guided_modes(GUIDE, 10.0)
    cutoffs = [cutoff_frequency(GUIDE, md.m, md.n) for md in modes]
    assert cutoffs == sorted(cutoffs)
    assert [(md.m, md.n) for md in modes[:4]] == [(1, 1), (3, 1), (5, 1), (1, 3)]
    assert [md.j for md in modes] == list(range(1, len(modes) + 1))
    # a tall guide interleaves differently
    tall = WaveguideSpec(a=1.0, b=1.5)
    assert [(md.m, md.n) for md in guided_modes(tall, 12.0)][:2] == [(1, 1), (1, 3)]


def test_single_mode_window():
    tls = TLSPair(omega_A=OMEGA_ONE)
    modes = mode_interaction_params(GUIDE, tls, (W11, W31))
    assert [(m.index.m, m.index.n) for m in modes] == [(1, 1)]


def test_two_mode_ratios():
    tls = TLSPair(omega_A=OMEGA_TWO, wavelengths=1.0)
    modes = mode_interaction_params(GUIDE, tls, (W31, W51))
    assert len(modes) == 2
    g = modes[1].gamma / modes[0].gamma
    r = modes[1].tau / modes[0].tau
    assert g == pytest.approx(3.777, abs=1e-3)
    assert r == pytest.approx(1.4526, abs=5e-4)
    assert r == pytest.approx(modes[0].v / modes[1].v, rel=1e-14)
    # independent check of the closed-form rate ratio
    v1 = math.sqrt(OMEGA_TWO ** 2 - W11 ** 2) / OMEGA_TWO
    v2 = math.sqrt(OMEGA_TWO ** 2 - W31 ** 2) / OMEGA_TWO
    assert g == pytest.approx((W31 / W11) ** 2 * v1 / v2, rel=1e-12)


def test_gamma1_parametrization_matches_dipoles():
    tls = TLSPair(omega_A=OMEGA_TWO, wavelengths=3.0)
    by_mu = mode_interaction_params(GUIDE, tls, (W31, W51))
    by_gamma = mode_interaction_params(GUIDE, tls, (W31, W51), gamma1=by_mu[0].gamma)
    for a, b in zip(by_mu, by_gamma):
        assert a.gamma == pytest.approx(b.gamma, rel=1e-12)
        assert a.phi == pytest.approx(b.phi, abs=1e-12)


def test_zero_separation():
    for m in mode_interaction_params(GUIDE, TLSPair(omega_A=OMEGA_TWO), (W31, W51)):
        assert m.phi == 0.0 and m.tau == 0.0
        assert m.alpha == m.gamma


def test_fig2_product():
    W = cutoff_frequency(GUIDE, 1, 1)
    omega_A = midband_frequency(GUIDE, (1, 1), (3, 1))
    v1 = group_velocity(W, omega_A)
    lam1 = 2 * math.pi / resonant_wavenumber(W, omega_A)
    gamma1 = 1.5e-10 * v1 / lam1
    mode = mode_interaction_params(GUIDE, TLSPair(omega_A=omega_A, wavelengths=8e9), gamma1=gamma1)[0]
    assert mode.gamma * mode.tau == pytest.approx(1.2, rel=1e-12)
    assert mode.phi == pytest.approx(0.0, abs=1e-9)


def test_large_n_phase_reduced_exactly():
    tls = TLSPair(omega_A=OMEGA_TWO, wavelengths=1.8e12)
    modes = mode_interaction_params(GUIDE, tls, (W31, W51), gamma1=1e-3)
    assert modes[0].phi == 0.0
    assert 0.0 <= modes[1].phi < 2 * math.pi


def test_equal_dipoles_rates():
    tls = TLSPair(omega_A=OMEGA_TWO, mu1=0.7, mu2=0.7)
    modes = mode_interaction_params(GUIDE, tls, (W31, W51))
    G1, G2 = total_decay_rates(modes)
    assert G1 == G2 == pytest.approx(sum(m.gamma for m in modes))
    assert all(m.equal_dipoles for m in modes)


def test_unequal_dipoles_bound():
    tls = TLSPair(omega_A=OMEGA_TWO, mu1=0.4, mu2=1.3)
    for m in mode_interaction_params(GUIDE, tls, (W31, W51)):
        assert m.gamma ** 2 <= m.gamma_l1 * m.gamma_l2 * (1 + 1e-12)
        assert abs(m.alpha) == pytest.approx(abs(m.gamma))


def test_window_and_empty_mode_errors():
    with pytest.raises(DomainError):
        mode_interaction_params(GUIDE, TLSPair(omega_A=OMEGA_ONE), (W31, W51))
    with pytest.raises(NoCoupledModesError):
        mode_interaction_params(GUIDE, TLSPair(omega_A=3.0))
    with pytest.raises(ModeDecoupledError):
        mode_interaction_params(GUIDE, TLSPair(omega_A=OMEGA_TWO), modes=[(2, 1)])


def test_tls_validation():
    with pytest.raises(DomainError):
        TLSPair(omega_A=4.0, d=-1.0)
    with pytest.raises(DomainError):
        TLSPair(omega_A=4.0, b1=1.0, b2=1.0)
    tls = TLSPair(omega_A=4.0, delta=0.5, d=2.0, z1=1.0)
    assert (tls.omega1, tls.omega2, tls.z2) == (4.5, 3.5, 3.0)

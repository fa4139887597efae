"""Static parameters of two emitters coupled to the TM modes of a rectangular guide.

Units are natural (c = b = hbar = eps0 = 1 by default), but every formula
keeps ``c``, ``hbar`` and ``eps0`` explicit so other unit systems work too.
Emitters sit on the guide axis at transverse position (a/2, b/2) with
dipoles along z, so only TM_mn modes with odd m and odd n couple.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import mpmath

from .errors import (
    DomainError,
    EvanescentModeError,
    ModeDecoupledError,
    NoCoupledModesError,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WaveguideSpec:
    """Transverse geometry of the guide.  Defaults give the a = 2b guide."""

    a: float = 2.0
    b: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    eps0: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "c", "hbar", "eps0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @property
    def area(self) -> float:
        return self.a * self.b


@dataclass(frozen=True, order=True)
class TransverseMode:
    """TM_mn mode label; ``j`` is the 1-based rank by ascending cutoff (0 = unranked)."""

    m: int
    n: int
    j: int = field(default=0, compare=False)

    @property
    def label(self) -> str:
        return f"TM{self.m}{self.n}"


def cutoff_frequency(spec: WaveguideSpec, m: int, n: int) -> float:
    """Cutoff ``c*sqrt((m*pi/a)**2 + (n*pi/b)**2)`` of the TM_mn mode."""
    if m < 1 or n < 1:
        raise DomainError(f"mode indices must be >= 1, got m={m}, n={n}")
    return spec.c * math.hypot(m * math.pi / spec.a, n * math.pi / spec.b)


def dispersion(Omega: float, k: float, c: float = 1.0) -> float:
    """Guided-mode frequency ``sqrt(Omega**2 + (c*k)**2)``."""
    return math.hypot(Omega, c * k)


def _check_propagating(Omega: float, omega_A: float) -> None:
    if not omega_A > Omega:
        raise EvanescentModeError(
            f"transition frequency {omega_A!r} does not exceed cutoff {Omega!r}"
        )


def resonant_wavenumber(Omega: float, omega_A: float, c: float = 1.0) -> float:
    """Wavenumber ``k0`` at which the mode is resonant with ``omega_A``."""
    _check_propagating(Omega, omega_A)
    # (w - W)(w + W) avoids cancellation close to the band edge
    return math.sqrt((omega_A - Omega) * (omega_A + Omega)) / c


def group_velocity(Omega: float, omega_A: float, c: float = 1.0) -> float:
    """``d omega / d k`` at the resonant wavenumber; lies in (0, c)."""
    _check_propagating(Omega, omega_A)
    return c * math.sqrt((omega_A - Omega) * (omega_A + Omega)) / omega_A


def coupling_strength(spec: WaveguideSpec, mode, mu: float) -> float:
    """Emitter-mode coupling ``g`` for a z dipole on the guide axis.

    ``mode`` is a :class:`TransverseMode` or an ``(m, n)`` pair.  The sign
    follows ``sin(m pi/2) sin(n pi/2)``; modes with an even index have a
    node on the axis and raise :class:`ModeDecoupledError`.
    """
    m, n = (mode.m, mode.n) if isinstance(mode, TransverseMode) else mode
    if m % 2 == 0 or n % 2 == 0:
        raise ModeDecoupledError(f"TM{m}{n} has a node at (a/2, b/2)")
    Omega = cutoff_frequency(spec, m, n)
    # sin(m pi/2) for odd m is exactly +-1
    sign = (1 if (m // 2) % 2 == 0 else -1) * (1 if (n // 2) % 2 == 0 else -1)
    return sign * Omega * mu / math.sqrt(spec.hbar * spec.area * math.pi * spec.eps0)


def guided_modes(spec: WaveguideSpec, omega_max: float) -> list[TransverseMode]:
    """All odd-odd TM modes with cutoff below ``omega_max``, ranked by cutoff."""
    m_max = int(omega_max * spec.a / (math.pi * spec.c)) + 1
    n_max = int(omega_max * spec.b / (math.pi * spec.c)) + 1
    found = []
    for m in range(1, m_max + 1, 2):
        for n in range(1, n_max + 1, 2):
            Omega = cutoff_frequency(spec, m, n)
            if Omega < omega_max:
                found.append((Omega, m, n))
    found.sort()
    return [TransverseMode(m, n, j) for j, (_, m, n) in enumerate(found, start=1)]


def midband_frequency(spec: WaveguideSpec, lower: tuple, upper: tuple) -> float:
    """Mean of two cutoffs, e.g. ``midband_frequency(spec, (1, 1), (3, 1))``."""
    return 0.5 * (cutoff_frequency(spec, *lower) + cutoff_frequency(spec, *upper))


@dataclass(frozen=True)
class TLSPair:
    """Two emitters at z1 and z1 + d, with mean frequency omega_A and half-splitting delta.

    If ``wavelengths`` is given, the separation is ``wavelengths`` resonant
    wavelengths of the lowest coupled mode; phases and delays are then
    derived from that count rather than from ``d`` (which is ignored).
    """

    omega_A: float
    delta: float = 0.0
    mu1: float = 1.0
    mu2: float = 1.0
    d: float = 0.0
    z1: float = 0.0
    b1: complex = 1 / math.sqrt(2)
    b2: complex = -1 / math.sqrt(2)
    wavelengths: Optional[float] = None

    def __post_init__(self):
        if self.d < 0:
            raise DomainError(f"separation d must be >= 0, got {self.d!r}")
        if self.wavelengths is not None and self.wavelengths < 0:
            raise DomainError("wavelengths must be >= 0")
        norm = abs(self.b1) ** 2 + abs(self.b2) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"initial amplitudes must be normalized, |b1|^2+|b2|^2={norm!r}")

    @property
    def omega1(self) -> float:
        return self.omega_A + self.delta

    @property
    def omega2(self) -> float:
        return self.omega_A - self.delta

    @property
    def z2(self) -> float:
        return self.z1 + self.d


@dataclass(frozen=True)
class ModeParams:
    """Derived quantities for one guided mode.

    ``gamma`` is the exchange rate between the emitters through this mode,
    ``gamma_l1``/``gamma_l2`` the individual decay rates of emitter 1/2 into
    it.  ``phi`` is the propagation phase reduced to [0, 2pi).
    """

    index: TransverseMode
    Omega: float
    v: float
    k0: float
    gamma: float
    gamma_l1: float
    gamma_l2: float
    phi: float
    tau: float

    @property
    def wavelength(self) -> float:
        return TWO_PI / self.k0

    @property
    def alpha(self) -> complex:
        return self.gamma * complex(math.cos(self.phi), math.sin(self.phi))

    @property
    def equal_dipoles(self) -> bool:
        return self.gamma_l1 == self.gamma_l2 == self.gamma


def total_decay_rates(modes: Sequence[ModeParams]) -> tuple[float, float]:
    """Total individual decay rates (Gamma_1, Gamma_2) summed over modes."""
    return (
        math.fsum(m.gamma_l1 for m in modes),
        math.fsum(m.gamma_l2 for m in modes),
    )


def _phases_from_wavelengths(n: float, k0s: Sequence[float]) -> list[float]:
    # n can reach 1e12, so k0*d carries ~13 integer digits; reduce in extended precision
    with mpmath.workdps(60):
        n_mp = mpmath.mpf(n)
        k_ref = mpmath.mpf(k0s[0])
        out = []
        for k in k0s:
            turns = n_mp * mpmath.mpf(k) / k_ref
            frac = turns - mpmath.floor(turns)
            out.append(float(2 * mpmath.pi * frac) % TWO_PI)
    return out


def _phases_from_distance(d: float, k0s: Sequence[float]) -> list[float]:
    with mpmath.workdps(40):
        out = []
        for k in k0s:
            phase = mpmath.mpf(k) * mpmath.mpf(d)
            out.append(float(phase - 2 * mpmath.pi * mpmath.floor(phase / (2 * mpmath.pi))) % TWO_PI)
    return out


def mode_interaction_params(
    spec: WaveguideSpec,
    tls: TLSPair,
    window: Optional[tuple[float, float]] = None,
    *,
    modes: Optional[Iterable] = None,
    gamma1: Optional[float] = None,
) -> list[ModeParams]:
    """Per-mode rates, phases and delays for every guided mode the pair couples to.

    Parameters
    ----------
    window : (low, high), optional
        Frequency interval that must strictly contain ``omega_A`` (normally the
        two cutoffs bracketing it).
    modes : iterable of (m, n), optional
        Restrict to these modes.  Each must be odd-odd and propagating.
    gamma1 : float, optional
        Exchange rate of the lowest mode.  When given, the dipoles only enter
        through their ratio and the other modes scale as
        ``(Omega_j/Omega_1)**2 * v_1/v_j``; otherwise rates follow from
        ``tls.mu1``/``tls.mu2`` and the coupling constants.
    """
    omega_A = tls.omega_A
    if window is not None:
        lo, hi = window
        if not lo < omega_A < hi:
            raise DomainError(f"omega_A={omega_A!r} is not inside window ({lo!r}, {hi!r})")

    available = guided_modes(spec, omega_A)
    if modes is not None:
        wanted = []
        for m, n in modes:
            if m % 2 == 0 or n % 2 == 0:
                raise ModeDecoupledError(f"TM{m}{n} has a node at (a/2, b/2)")
            _check_propagating(cutoff_frequency(spec, m, n), omega_A)
            wanted.append((m, n))
        available = [md for md in available if (md.m, md.n) in wanted]
        available = [TransverseMode(md.m, md.n, j) for j, md in enumerate(available, start=1)]
    if not available:
        raise NoCoupledModesError(f"no guided TM mode below omega_A={omega_A!r}")

    Omegas = [cutoff_frequency(spec, md.m, md.n) for md in available]
    vs = [group_velocity(W, omega_A, spec.c) for W in Omegas]
    k0s = [resonant_wavenumber(W, omega_A, spec.c) for W in Omegas]

    if gamma1 is not None:
        mu_ref2 = tls.mu1 * tls.mu2
        if mu_ref2 == 0:
            raise DomainError("gamma1 parametrization needs nonzero dipoles")
        crosses = [gamma1 * (W / Omegas[0]) ** 2 * (vs[0] / v) for W, v in zip(Omegas, vs)]
        rates = [
            (g, g * tls.mu1 ** 2 / mu_ref2, g * tls.mu2 ** 2 / mu_ref2) for g in crosses
        ]
        if tls.mu1 == tls.mu2:
            rates = [(g, g, g) for g in crosses]
    else:
        rates = []
        for md, v in zip(available, vs):
            g1 = coupling_strength(spec, md, tls.mu1)
            g2 = coupling_strength(spec, md, tls.mu2)
            scale = math.pi / (v * omega_A)
            rates.append((g1 * g2 * scale, g1 * g1 * scale, g2 * g2 * scale))

    if tls.wavelengths is not None:
        n_wl = tls.wavelengths
        lam1 = TWO_PI / k0s[0]
        phis = _phases_from_wavelengths(n_wl, k0s)
        taus = [n_wl * lam1 / v for v in vs]
    else:
        phis = _phases_from_distance(tls.d, k0s)
        taus = [tls.d / v for v in vs]

    return [
        ModeParams(
            index=md, Omega=W, v=v, k0=k0,
            gamma=g, gamma_l1=g1, gamma_l2=g2, phi=phi, tau=tau,
        )
        for md, W, v, k0, (g, g1, g2), phi, tau in zip(available, Omegas, vs, k0s, rates, phis, taus)
    ]

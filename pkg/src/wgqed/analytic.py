"""Closed-form solutions used as independent oracles for the integrator.

Single-mode retarded dynamics
-----------------------------
With one guided mode the amplitudes obey

    (d/dt - i xi1) B1 = -alpha B2(t - tau) Theta(t - tau)
    (d/dt - i xi2) B2 = -alpha B1(t - tau) Theta(t - tau)

Expanding the Laplace-domain resolvent in powers of ``alpha**2 exp(-2 s tau)``
turns the inverse transform into a finite sum of residues at the two poles
``z = xi1, xi2`` (``s = i z``).  Each residue is a derivative of
``exp(i z t) / (z - xi)**m``, evaluated by the Leibniz rule.

The two residues of one order nearly cancel when ``xi1 ~ xi2``.  Terms are
summed in extended precision (mpmath) with the working precision raised
until the rounding error is below 1e-17, and for (near-)coincident poles
the pair of residues is evaluated jointly as

    sum_k Res_{xi_k} e^{izt} / ((z-xi1)^p (z-xi2)^q)
        = e^{i xi1 t} (it)^{p+q-1} / (p+q-1)! * 1F1(q; p+q; i(xi2-xi1) t)

which is regular at ``xi1 == xi2``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .errors import ConfluentPoleError, DomainError, InvalidDelayError, OrderCapError

MAX_DELAY_ORDERS = 200
CONFLUENCE_RTOL = 1e-8
_BASE_DPS = 25
_ROUNDING_TARGET = 1e-17


@dataclass(frozen=True)
class SingleModeParams:
    """Parameters of the single-mode equations.

    ``xi1 = i*gamma_11 - delta`` and ``xi2 = i*gamma_21 + delta``; ``alpha1``
    is the complex exchange coefficient and ``tau1`` the delay.
    """

    xi1: complex
    xi2: complex
    alpha1: complex
    tau1: float

    def __post_init__(self):
        if self.xi1.imag < 0 or self.xi2.imag < 0:
            raise DomainError("decay rates Im(xi) must be >= 0")

    @classmethod
    def from_rates(cls, gamma_11, gamma_21, delta, alpha1, tau1):
        return cls(complex(-delta, gamma_11), complex(delta, gamma_21), complex(alpha1), float(tau1))

    @classmethod
    def from_mode(cls, mode, delta):
        """Build from a :class:`~wgqed.waveguide.ModeParams`."""
        return cls.from_rates(mode.gamma_l1, mode.gamma_l2, delta, mode.alpha, mode.tau)

    @property
    def rate_scale(self) -> float:
        scale = max(
            abs(self.xi1.imag), abs(self.xi2.imag), abs(self.alpha1),
            abs(self.xi1.real - self.xi2.real) / 2,
        )
        return scale if scale > 0 else 1.0

    @property
    def confluent(self) -> bool:
        return abs(self.xi1 - self.xi2) < CONFLUENCE_RTOL * self.rate_scale


def _rising(m: int, j: int) -> int:
    out = 1
    for i in range(j):
        out *= m + i
    return out


def _leibniz(order: int, power: int, zeta, xi, t, weight, acc: list):
    """``weight * d^order/dz^order [exp(i z t) (z - xi)**(-power)]`` at ``z = zeta``.

    Works on mp values; appends the magnitude of every summand to ``acc``.
    """
    e = weight * mpmath.exp(1j * zeta * t)
    it = 1j * t
    if power == 0:
        term = e * it ** order
        acc.append(abs(term))
        return term
    inv = 1 / (zeta - xi)
    total = mpmath.mpc(0)
    for j in range(order + 1):
        term = (
            (math.comb(order, j) * (-1) ** j * _rising(power, j))
            * it ** (order - j)
            * inv ** (power + j)
            * e
        )
        acc.append(abs(term))
        total += term
    return total


def _terms_mp(p: SingleModeParams, n: int, t, acc: list, even=True, odd=True):
    zero = mpmath.mpc(0)
    xi1, xi2 = mpmath.mpc(p.xi1), mpmath.mpc(p.xi2)
    a = mpmath.mpc(p.alpha1)
    tau = mpmath.mpf(p.tau1)
    A1 = A2 = B1 = B2 = C1 = C2 = zero
    if even:
        t_even = mpmath.mpf(t) - 2 * n * tau
        ce = (-1j * a) ** (2 * n)
        wb = ce / mpmath.factorial(n)
        if n >= 1:
            wa = ce / mpmath.factorial(n - 1)
            A1 = _leibniz(n - 1, n + 1, xi1, xi2, t_even, wa, acc)
            A2 = _leibniz(n - 1, n + 1, xi2, xi1, t_even, wa, acc)
        B1 = _leibniz(n, n, xi1, xi2, t_even, wb, acc)
        B2 = _leibniz(n, n, xi2, xi1, t_even, wb, acc)
    if odd:
        t_odd = mpmath.mpf(t) - (2 * n + 1) * tau
        wc = (-1j * a) ** (2 * n + 1) / mpmath.factorial(n)
        C1 = _leibniz(n, n + 1, xi1, xi2, t_odd, wc, acc)
        C2 = _leibniz(n, n + 1, xi2, xi1, t_odd, wc, acc)
    return A1, A2, B1, B2, C1, C2


def residue_terms(params: SingleModeParams, n: int, t: float) -> tuple:
    """Residue contributions of order ``n`` at time ``t``.

    Returns ``(A_n(xi1), A_n(xi2), B_n(xi1), B_n(xi2), C_n(xi1), C_n(xi2))``
    without the step-function cut-off.  ``A_0`` is zero: at order zero the
    only pole of the direct term is the simple one, contributing
    ``B_0(xi_k) = exp(i xi_k t)``.
    """
    if n < 0:
        raise DomainError("order must be >= 0")
    if params.xi1 == params.xi2 or params.confluent:
        raise ConfluentPoleError("individual residues diverge at coincident poles")
    dps = _BASE_DPS
    while True:
        acc = []
        with mpmath.workdps(dps):
            vals = _terms_mp(params, n, t, acc)
            biggest = max((float(x) for x in acc), default=0.0)
        if biggest * 10.0 ** (3 - dps) <= _ROUNDING_TARGET * max(1.0, max(abs(complex(v)) for v in vals)):
            return tuple(complex(v) for v in vals)
        dps = max(dps + 10, _BASE_DPS + int(math.ceil(math.log10(biggest))) + 3)


def kummer_pair_sum(p: int, q: int, xi_a, xi_b, t):
    """Sum of both residues of ``exp(i z t) / ((z - xi_a)**p (z - xi_b)**q)`` (mp value)."""
    k = p + q - 1
    if k < 0:
        return mpmath.mpc(0)
    t = mpmath.mpf(t)
    pref = mpmath.exp(1j * xi_a * t) * (1j * t) ** k / mpmath.factorial(k)
    if q == 0:
        return pref
    return pref * mpmath.hyp1f1(q, p + q, 1j * (xi_b - xi_a) * t)


def _series_point(params: SingleModeParams, b1, b2, t: float, method: str):
    n_even = int(math.floor(t / (2 * params.tau1)))
    n_odd = int(math.floor((t - params.tau1) / (2 * params.tau1))) if t >= params.tau1 else -1
    # exact grid hits (t == k*tau) must keep their Theta(0) = 1 term
    if 2 * (n_even + 1) * params.tau1 <= t:
        n_even += 1
    if (2 * (n_odd + 1) + 1) * params.tau1 <= t:
        n_odd += 1
    while n_even > 0 and 2 * n_even * params.tau1 > t:
        n_even -= 1
    while n_odd >= 0 and (2 * n_odd + 1) * params.tau1 > t:
        n_odd -= 1
    n_max = max(n_even, n_odd)

    if method == "kummer":
        with mpmath.workdps(_BASE_DPS):
            xi1, xi2 = mpmath.mpc(params.xi1), mpmath.mpc(params.xi2)
            a = mpmath.mpc(params.alpha1)
            tau = mpmath.mpf(params.tau1)
            tm = mpmath.mpf(t)
            s1, s2 = [], []
            for n in range(n_max + 1):
                if n <= n_even:
                    ce = (-1j * a) ** (2 * n)
                    te = tm - 2 * n * tau
                    s1.append(b1 * ce * kummer_pair_sum(n + 1, n, xi1, xi2, te))
                    s2.append(b2 * ce * kummer_pair_sum(n + 1, n, xi2, xi1, te))
                if n <= n_odd:
                    co = (-1j * a) ** (2 * n + 1)
                    cpair = co * kummer_pair_sum(n + 1, n + 1, xi1, xi2, tm - (2 * n + 1) * tau)
                    s1.append(-b2 * cpair)
                    s2.append(-b1 * cpair)
            return complex(mpmath.fsum(s1)), complex(mpmath.fsum(s2))

    dps = _BASE_DPS
    while True:
        acc = []
        with mpmath.workdps(dps):
            s1, s2 = [], []
            for n in range(n_max + 1):
                A1, A2, B1, B2, C1, C2 = _terms_mp(
                    params, n, t, acc, even=n <= n_even, odd=n <= n_odd
                )
                if n <= n_even:
                    s1.append(b1 * (A2 + B1))
                    s2.append(b2 * (A1 + B2))
                if n <= n_odd:
                    s1.append(-b2 * (C2 + C1))
                    s2.append(-b1 * (C1 + C2))
            r1, r2 = mpmath.fsum(s1), mpmath.fsum(s2)
            biggest = max((float(x) for x in acc), default=0.0)
        if biggest * 10.0 ** (3 - dps) <= _ROUNDING_TARGET:
            return complex(r1), complex(r2)
        dps = max(dps + 10, _BASE_DPS + int(math.ceil(math.log10(biggest))) + 3)


def series_solution(params: SingleModeParams, b0: Sequence[complex], t, method: str = "auto"):
    """Amplitudes ``(B1(t), B2(t))`` from the residue series.

    ``t`` may be a scalar (returns shape ``(2,)``) or a 1-d array (returns
    ``(len(t), 2)``).  ``method`` is ``"leibniz"`` (per-pole residues),
    ``"kummer"`` (joint pole-pair form) or ``"auto"``, which uses the
    Leibniz form unless the poles are confluent.
    """
    if not params.tau1 > 0:
        raise InvalidDelayError("series needs tau1 > 0; use markov_solution for tau1 = 0")
    if method not in ("auto", "leibniz", "kummer"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "kummer" if params.confluent else "leibniz"
    elif method == "leibniz" and (params.confluent or params.xi1 == params.xi2):
        raise ConfluentPoleError("poles coincide; use method='kummer' or 'auto'")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise DomainError("t must be >= 0")
    if np.any(ts > MAX_DELAY_ORDERS * params.tau1):
        raise OrderCapError(f"t/tau1 exceeds {MAX_DELAY_ORDERS}; use the integrator")
    b1, b2 = complex(b0[0]), complex(b0[1])
    out = np.array([_series_point(params, b1, b2, float(tt), method) for tt in ts], dtype=complex)
    return out[0] if np.ndim(t) == 0 else out


def markov_solution(gammas, delta: float, c0: Sequence[complex], t):
    """Exact solution of the delay-free symmetric/antisymmetric system

        dCs/dt = -Gamma_s Cs - i delta Ca
        dCa/dt = -i delta Cs - Gamma_a Ca

    by the closed-form 2x2 matrix exponential.  ``gammas = (Gamma_s, Gamma_a)``
    may be complex.  Covers ``(2*gamma_1, 0)`` (single mode, zero delay,
    in-phase emitters) and ``(Gamma, Gamma)`` (before the first delay).
    """
    gs, ga = complex(gammas[0]), complex(gammas[1])
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise DomainError("t must be >= 0")
    m = -(gs + ga) / 2
    h = -(gs - ga) / 2
    N = np.array([[h, -1j * delta], [-1j * delta, -h]], dtype=complex)
    q = cmath.sqrt(h * h - delta * delta)
    c0 = np.asarray(c0, dtype=complex)
    Nc = N @ c0
    out = np.empty((ts.size, 2), dtype=complex)
    for i, tt in enumerate(ts):
        if (m.real) * tt > 700:
            raise OverflowError(f"solution overflows at t={tt!r}")
        qt = q * tt
        if abs(qt) < 1e-3:
            x = qt * qt
            sinhc = tt * (1 + x / 6 + x * x / 120 + x ** 3 / 5040)
            cosh = 1 + x / 2 + x * x / 24 + x ** 3 / 720
            out[i] = cmath.exp(m * tt) * (cosh * c0 + sinhc * Nc)
        else:
            plus = cmath.exp((m + q) * tt) / 2
            minus = cmath.exp((m - q) * tt) / 2
            out[i] = (plus + minus) * c0 + ((plus - minus) / q) * Nc
    return out[0] if np.ndim(t) == 0 else out

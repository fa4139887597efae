"""Entanglement and population diagnostics on amplitude trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import FitDomainError, NormViolationError

NORM_TOL = 1e-9
SQRT_HALF = 1 / math.sqrt(2)


def concurrence(B1, B2, tol: float = NORM_TOL):
    """Concurrence ``max(0, 2|B1 conj(B2)|)`` of a single-excitation state.

    Accepts scalars or arrays.  Raises :class:`NormViolationError` if
    ``|B1|^2 + |B2|^2`` exceeds one by more than ``tol``.
    """
    B1 = np.asarray(B1)
    B2 = np.asarray(B2)
    norm = np.abs(B1) ** 2 + np.abs(B2) ** 2
    if np.any(norm > 1 + tol):
        raise NormViolationError(f"state norm {float(np.max(norm))!r} exceeds 1")
    c = np.maximum(0.0, 2.0 * np.abs(B1 * np.conj(B2)))
    return float(c) if c.ndim == 0 else c


@dataclass
class ObservableSeries:
    times: np.ndarray
    C: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    Ps: np.ndarray
    Pa: np.ndarray

    @property
    def norm(self) -> np.ndarray:
        return self.P1 + self.P2

    @classmethod
    def from_bare(cls, times, states, tol: float = NORM_TOL) -> "ObservableSeries":
        states = np.asarray(states)
        B1, B2 = states[:, 0], states[:, 1]
        Cs = (B1 + B2) * SQRT_HALF
        Ca = (B1 - B2) * SQRT_HALF
        return cls(
            times=np.asarray(times),
            C=concurrence(B1, B2, tol),
            P1=np.abs(B1) ** 2,
            P2=np.abs(B2) ** 2,
            Ps=np.abs(Cs) ** 2,
            Pa=np.abs(Ca) ** 2,
        )

    def max_norm_excess(self) -> float:
        """Largest ``N(t) - 1``; should never exceed ~1e-9."""
        return float(np.max(self.norm) - 1.0)


class Revival(NamedTuple):
    onset: float
    time: float
    peak: float


def detect_revivals(series: ObservableSeries, floor: float = 1e-3) -> list[Revival]:
    """Entanglement revivals: rises of C above ``floor`` after it fell below.

    For each excursion above ``floor`` that follows a stretch below it, the
    highest grid point is the peak and the smallest value of the preceding
    low stretch marks the onset.  An excursion still rising at the last
    sample is not reported.
    """
    if not floor > 0:
        raise ValueError("floor must be positive")
    C = np.asarray(series.C)
    t = np.asarray(series.times)
    out = []
    below = np.flatnonzero(C < floor)
    if below.size == 0:
        return out
    i = int(below[0])
    n = len(C)
    while i < n:
        # i is inside a below-floor stretch; find where it ends
        j = i
        while j < n and C[j] < floor:
            j += 1
        if j >= n:
            break
        low = i + int(np.argmin(C[i:j]))
        k = j
        while k < n and C[k] >= floor:
            k += 1
        top = j + int(np.argmax(C[j:k]))
        if 0 < top < n - 1:
            out.append(Revival(float(t[low]), float(t[top]), float(C[top])))
        i = k
    return out


def decay_rate_fit(series: ObservableSeries, window: tuple[float, float], values: Optional[np.ndarray] = None) -> float:
    """Exponential decay rate of C (or ``values``) over ``window``.

    Least-squares slope of ``ln C(t)``, returned with the sign flipped so a
    decaying series gives a positive rate.
    """
    t = np.asarray(series.times)
    y = np.asarray(series.C if values is None else values)
    sel = (t >= window[0]) & (t <= window[1])
    if np.count_nonzero(sel) < 2:
        raise FitDomainError("fewer than two samples in the fit window")
    ys = y[sel]
    if np.any(ys <= 0):
        raise FitDomainError("non-positive values inside the fit window")
    if np.all(ys == ys[0]):
        return 0.0
    slope = np.polyfit(t[sel], np.log(ys), 1)[0]
    return -float(slope)

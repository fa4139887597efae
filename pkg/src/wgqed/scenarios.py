"""Delay systems for the physical scenarios, basis changes and scenario runs.

Two bases are used for the amplitude pair: the bare one (B1, B2) of
|eg> and |ge>, and the collective one (Cs, Ca) of
|s> = (|eg> + |ge>)/sqrt2 and |a> = (|eg> - |ge>)/sqrt2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .dde import DelaySystem, Trajectory, integrate, refine_until
from .errors import BasisUnavailableError, DomainError
from .observables import ObservableSeries
from .waveguide import TWO_PI, ModeParams, total_decay_rates

SQRT_HALF = 1 / math.sqrt(2)
# symmetric and self-inverse
BARE_TO_SA = np.array([[1.0, 1.0], [1.0, -1.0]]) * SQRT_HALF

INITIAL_STATES = {
    "antisym": (SQRT_HALF, -SQRT_HALF),
    "sym": (SQRT_HALF, SQRT_HALF),
    "eg": (1.0, 0.0),
    "ge": (0.0, 1.0),
}
_ALIASES = {"a": "antisym", "s": "sym", "|a>": "antisym", "|s>": "sym"}

# RK4 step limit: dt * (largest rate) <= this
RATE_STEP = 0.005


def bare_to_sa(x):
    """``(B1, B2) -> (Cs, Ca)``; works on the last axis of arrays."""
    return np.asarray(x) @ BARE_TO_SA.T


def sa_to_bare(x):
    return np.asarray(x) @ BARE_TO_SA.T


def build_bare_system(
    modes: Sequence[ModeParams],
    delta: float,
    Gamma1: Optional[float] = None,
    Gamma2: Optional[float] = None,
) -> DelaySystem:
    """Retarded equations for (B1, B2) with one delayed exchange term per mode."""
    if not modes:
        raise DomainError("at least one mode is required")
    G1, G2 = total_decay_rates(modes)
    G1 = G1 if Gamma1 is None else Gamma1
    G2 = G2 if Gamma2 is None else Gamma2
    A0 = np.array([[-G1 - 1j * delta, 0.0], [0.0, -G2 + 1j * delta]], dtype=complex)
    delayed = [(m.tau, np.array([[0.0, -m.alpha], [-m.alpha, 0.0]])) for m in modes]
    return DelaySystem(A0, delayed, description=f"bare, {len(modes)} mode(s), delta={delta!r}")


def build_sa_system(modes: Sequence[ModeParams], delta: float) -> DelaySystem:
    """Retarded equations for (Cs, Ca); needs identical dipoles."""
    if not modes:
        raise DomainError("at least one mode is required")
    if not all(m.equal_dipoles for m in modes):
        raise BasisUnavailableError("the s/a basis needs equal dipoles in every mode")
    Gamma = math.fsum(m.gamma for m in modes)
    A0 = np.array([[-Gamma, -1j * delta], [-1j * delta, -Gamma]], dtype=complex)
    delayed = [(m.tau, np.diag([-m.alpha, m.alpha])) for m in modes]
    return DelaySystem(A0, delayed, description=f"sa, {len(modes)} mode(s), delta={delta!r}")


def oscillation_strength(delta: float, alpha2: Optional[complex] = None) -> float:
    """s/a coupling frequency: ``|delta|`` with one mode, ``hypot(delta, Im alpha2)`` with two."""
    if alpha2 is None:
        return abs(delta)
    return math.hypot(delta, complex(alpha2).imag)


def choose_dt(system: DelaySystem, t_max: float, rate_step: float = RATE_STEP) -> float:
    """Grid step resolving the fastest rate, aligned so the shortest delay is a node."""
    rate = float(np.max(np.sum(np.abs(system.A0), axis=1)))
    rate += sum(float(np.max(np.sum(np.abs(Am), axis=1))) for _, Am in system.delayed)
    dt = rate_step / rate if rate > 0 else t_max / 1000.0
    dt = min(dt, t_max / 1000.0)
    tau_min = system.min_delay
    if tau_min is not None:
        dt = tau_min / math.ceil(tau_min / dt - 1e-9)
    return dt


@dataclass(frozen=True)
class ScenarioSpec:
    """One dynamics run.

    ``initial`` is a state name (``antisym``, ``sym``, ``eg``, ``ge``) or an
    amplitude pair given in ``initial_basis``.  Leaving ``dt`` unset picks
    a step from the rates; setting ``tol`` refines the step until
    successive runs agree to ``tol``.
    """

    modes: tuple
    t_max: float
    delta: float = 0.0
    basis: str = "bare"
    initial: Union[str, tuple] = "antisym"
    initial_basis: str = "bare"
    dt: Optional[float] = None
    tol: Optional[float] = None
    Gamma1: Optional[float] = None
    Gamma2: Optional[float] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise DomainError("modes must be non-empty")
        if self.basis not in ("bare", "sa"):
            raise DomainError(f"basis must be 'bare' or 'sa', got {self.basis!r}")
        if self.initial_basis not in ("bare", "sa"):
            raise DomainError(f"initial_basis must be 'bare' or 'sa', got {self.initial_basis!r}")
        if not self.t_max > 0:
            raise DomainError("t_max must be positive")
        x = self.initial_bare()
        norm = float(np.sum(np.abs(x) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"initial amplitudes must be normalized (norm {norm!r})")

    def initial_bare(self) -> np.ndarray:
        if isinstance(self.initial, str):
            key = _ALIASES.get(self.initial, self.initial)
            if key not in INITIAL_STATES:
                raise DomainError(f"unknown initial state {self.initial!r}")
            return np.array(INITIAL_STATES[key], dtype=complex)
        x = np.array(self.initial, dtype=complex)
        return sa_to_bare(x) if self.initial_basis == "sa" else x

    def decay_rates(self) -> tuple[float, float]:
        G1, G2 = total_decay_rates(self.modes)
        return (G1 if self.Gamma1 is None else self.Gamma1, G2 if self.Gamma2 is None else self.Gamma2)

    def system(self) -> DelaySystem:
        if self.basis == "sa":
            return build_sa_system(self.modes, self.delta)
        return build_bare_system(self.modes, self.delta, self.Gamma1, self.Gamma2)


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    bare: Trajectory
    sa: Trajectory
    observables: ObservableSeries
    meta: dict


def run_scenario(spec: ScenarioSpec) -> ScenarioResult:
    """Integrate ``spec`` in its basis and attach the other basis and observables."""
    system = spec.system()
    x0 = spec.initial_bare()
    if spec.basis == "sa":
        x0 = bare_to_sa(x0)
    dt = spec.dt if spec.dt is not None else choose_dt(system, spec.t_max)
    if spec.tol is not None:
        traj = refine_until(system, x0, spec.t_max, spec.tol, dt0=dt)
    else:
        traj = integrate(system, x0, spec.t_max, dt)
    traj.meta["basis"] = spec.basis
    if spec.basis == "sa":
        sa, bare = traj, traj.transformed(BARE_TO_SA, basis="bare")
    else:
        bare, sa = traj, traj.transformed(BARE_TO_SA, basis="sa")
    obs = ObservableSeries.from_bare(bare.times, bare.states)

    G1, G2 = spec.decay_rates()
    alpha2 = spec.modes[1].alpha if len(spec.modes) > 1 else None
    meta = {
        "name": spec.name,
        "basis": spec.basis,
        "delta": spec.delta,
        "Gamma1": G1,
        "Gamma2": G2,
        "dt": traj.dt,
        "refinements": traj.meta.get("refinements", 0),
        "refinement_error": traj.meta.get("refinement_error"),
        "gamma_tau": [m.gamma * m.tau for m in spec.modes],
        "phi_mod_2pi": [m.phi % TWO_PI for m in spec.modes],
        "Omega_osc": oscillation_strength(spec.delta, alpha2),
        "n_steps": len(traj) - 1,
    }
    meta.update(spec.meta)
    return ScenarioResult(spec, bare, sa, obs, meta)

"""Method-of-steps integrator for linear complex delay systems.

    dX/dt = A0 X(t) + sum_m A_m X(t - tau_m) Theta(t - tau_m),   X(t<0) = 0

Classical RK4 on a uniform grid.  Delayed arguments are read from a
cubic Hermite interpolant of the already-computed history.  Because
``dt <= min(tau_m)``, every delayed argument needed by a run of
``floor(min(tau)/dt)`` consecutive steps is known before the run starts, so
the forcing for the whole run is evaluated at once and only the
instantaneous part is stepped sequentially.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import ConvergenceError, DivergedError, DomainError, QueryAheadError

# grid-unit slack for snapping delayed arguments onto nodes
_SNAP = 1e-7


class DelaySystem:
    """Coefficients of a linear constant-delay system.

    ``delayed`` holds ``(tau, matrix)`` pairs; pairs with ``tau == 0`` are
    folded into the instantaneous matrix, since Theta(t) = 1 for t >= 0.
    """

    def __init__(self, A0, delayed: Iterable = (), description: str = ""):
        A0 = np.array(A0, dtype=complex)
        if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
            raise DomainError(f"A0 must be square, got shape {A0.shape}")
        kept = []
        for tau, Am in delayed:
            tau = float(tau)
            Am = np.array(Am, dtype=complex)
            if Am.shape != A0.shape:
                raise DomainError(f"delayed matrix shape {Am.shape} != {A0.shape}")
            if not tau >= 0 or not math.isfinite(tau):
                raise DomainError(f"delays must be finite and >= 0, got {tau!r}")
            if tau == 0.0:
                A0 = A0 + Am
            else:
                kept.append((tau, Am))
        A0.setflags(write=False)
        for _, Am in kept:
            Am.setflags(write=False)
        self.A0 = A0
        self.delayed = tuple(kept)
        self.description = description

    @property
    def dim(self) -> int:
        return self.A0.shape[0]

    @property
    def min_delay(self) -> Optional[float]:
        return min((tau for tau, _ in self.delayed), default=None)

    def with_matrix(self, index: int, Am) -> "DelaySystem":
        """Copy with the ``index``-th delayed matrix replaced."""
        delayed = list(self.delayed)
        delayed[index] = (delayed[index][0], Am)
        return DelaySystem(self.A0, delayed, self.description)

    def __repr__(self):
        taus = ", ".join(f"{tau:.6g}" for tau, _ in self.delayed)
        return f"DelaySystem(dim={self.dim}, delays=[{taus}])"


class HistoryBuffer:
    """Grid states plus one-sided derivatives for dense access to the past.

    Each cell ``[t_i, t_{i+1}]`` carries its own end-point derivatives, so a
    derivative jump at a node (a delayed term switching on) does not leak
    into the neighbouring cell's interpolant.
    """

    def __init__(self, dt: float, dim: int, n_steps: int):
        self.dt = dt
        self.states = np.zeros((n_steps + 1, dim), dtype=complex)
        self.d_start = np.zeros((n_steps, dim), dtype=complex)
        self.d_end = np.zeros((n_steps, dim), dtype=complex)
        self.n_current = 0
        # cell -> (edges, states at edges, derivative right of each edge,
        # derivative left of each edge) for cells with a slope jump inside
        self.kinked: dict = {}

    def add_kinked_cell(self, cell: int, edges, pieces, A0) -> None:
        """Record the sub-nodes of a cell in which a delayed term switched on."""
        x0 = self.states[cell]
        xs, right, left = [], [], []
        for M, e, f_start, _ in pieces:
            x = M @ x0 + e
            xs.append(x)
            right.append(A0 @ x + f_start)
        xs.append(self.states[cell + 1])
        left.append(None)
        for (M, e, _, f_end), x in zip(pieces, xs[1:]):
            left.append(A0 @ x + f_end)
        right[0] = self.d_start[cell]
        left[-1] = self.d_end[cell]
        self.kinked[cell] = (np.asarray(edges), xs, right, left)

    @property
    def t_current(self) -> float:
        return self.n_current * self.dt

    def eval_units(self, u: np.ndarray) -> np.ndarray:
        """States at grid coordinates ``u = t/dt`` (any shape); zero for u < 0."""
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape + (self.states.shape[1],), dtype=complex)
        nearest = np.rint(u)
        u = np.where(np.abs(u - nearest) < _SNAP, nearest, u)
        if np.any(u > self.n_current):
            bad = float(u.max()) * self.dt
            raise QueryAheadError(f"history queried at t={bad!r} beyond t_current={self.t_current!r}")
        live = u >= 0
        if not np.any(live):
            return out
        uu = u[live]
        cell = np.floor(uu).astype(np.int64)
        theta = uu - cell
        at_node = theta == 0.0
        res = np.empty((uu.size, self.states.shape[1]), dtype=complex)
        res[at_node] = self.states[cell[at_node]]
        inner = ~at_node
        if np.any(inner):
            c = cell[inner]
            th = theta[inner][:, None]
            th2 = th * th
            th3 = th2 * th
            h00 = 2 * th3 - 3 * th2 + 1
            h10 = th3 - 2 * th2 + th
            h01 = -2 * th3 + 3 * th2
            h11 = th3 - th2
            res[inner] = (
                h00 * self.states[c]
                + h01 * self.states[c + 1]
                + self.dt * (h10 * self.d_start[c] + h11 * self.d_end[c])
            )
            if self.kinked:
                for k in np.flatnonzero(inner):
                    if cell[k] in self.kinked:
                        res[k] = self._eval_kinked(int(cell[k]), float(theta[k]))
        out[live] = res
        return out


    def _eval_kinked(self, cell: int, theta: float) -> np.ndarray:
        edges, xs, right, left = self.kinked[cell]
        i = min(int(np.searchsorted(edges, theta, side="right")) - 1, len(edges) - 2)
        w = edges[i + 1] - edges[i]
        th = (theta - edges[i]) / w
        th2 = th * th
        th3 = th2 * th
        return (
            (2 * th3 - 3 * th2 + 1) * xs[i]
            + (-2 * th3 + 3 * th2) * xs[i + 1]
            + w * self.dt * ((th3 - 2 * th2 + th) * right[i] + (th3 - th2) * left[i + 1])
        )


def history_eval(buffer: HistoryBuffer, t: float) -> np.ndarray:
    """Interpolated state at time ``t``; exact at grid nodes, zero before t = 0."""
    return buffer.eval_units(np.array(t / buffer.dt))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict)
    history: Optional[HistoryBuffer] = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)

    def at(self, t) -> np.ndarray:
        """Dense output through the Hermite history (requires ``history``)."""
        if self.history is None:
            raise ValueError("trajectory carries no history buffer")
        return self.history.eval_units(np.asarray(t, dtype=float) / self.dt)

    def transformed(self, matrix, **meta) -> "Trajectory":
        """Copy with every state mapped through ``matrix``."""
        m = np.asarray(matrix)
        info = dict(self.meta)
        info.update(meta)
        return Trajectory(self.times, self.states @ m.T, self.dt, info, None)


def _step_count(t_max: float, dt: float) -> int:
    return max(1, math.ceil(t_max / dt - 1e-9))


def _rk4_forcing(A: np.ndarray, dt: float, f0, fh, f1) -> np.ndarray:
    """Forcing part of one RK4 step (the x-independent half, by linearity)."""
    At = A.T
    k1 = f0
    k2 = (0.5 * dt) * (k1 @ At) + fh
    k3 = (0.5 * dt) * (k2 @ At) + fh
    k4 = dt * (k3 @ At) + f1
    return (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_propagator(A: np.ndarray, dt: float) -> np.ndarray:
    hA = dt * A
    eye = np.eye(A.shape[0], dtype=complex)
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    return eye + hA + hA2 / 2.0 + hA3 / 6.0 + (hA3 @ hA) / 24.0


def _split_step(A0, dt, n, cuts, taus_u, mats_t, hist):
    """Affine map ``x -> M x + e`` for step ``n`` when delayed terms switch on inside it.

    The step is cut at the switch-on points (fractions ``cuts`` of the step)
    and each piece is an ordinary RK4 step with a constant set of active
    terms, so the forcing jump is not smeared over the quadrature nodes.
    Also returns, per cut, the partial map and the forcing just left and
    right of it, from which the history stores the kink exactly.
    """
    dim = A0.shape[0]
    M = np.eye(dim, dtype=complex)
    e = np.zeros(dim, dtype=complex)
    edges = [0.0, *cuts, 1.0]
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = (hi - lo) * dt
        # terms whose switch-on lies at or before this piece's start
        on = [m for m, tu in enumerate(taus_u) if n + lo - tu >= -_SNAP]
        forcing = []
        for c in (lo, 0.5 * (lo + hi), hi):
            f = np.zeros((1, dim), dtype=complex)
            for m in on:
                f += hist.eval_units(np.array([n + c - taus_u[m]])) @ mats_t[m]
            forcing.append(f)
        pieces.append((M.copy(), e.copy(), forcing[0][0], forcing[2][0]))
        Ph = _rk4_propagator(A0, h)
        M = Ph @ M
        e = Ph @ e + _rk4_forcing(A0, h, *forcing)[0]
    return M, e, (edges, pieces)


def _off_grid_breaks(taus_u: np.ndarray, n_steps: int) -> list[tuple[int, float]]:
    """Off-grid derivative breaks ``tau_i`` and ``tau_i + tau_j`` as (step, fraction).

    A delayed term switching on makes X' jump at ``tau_i``; that kink
    reappears one delay later as a jump in X''.  Cutting RK4 steps at these
    points keeps the global order at three; later breaks are smoother
    and are left alone.
    """
    points = set(taus_u.tolist())
    points.update(a + b for a in taus_u.tolist() for b in taus_u.tolist())
    out = []
    for u in sorted(points):
        step = int(math.floor(u))
        frac = u - step
        if _SNAP < frac < 1 - _SNAP and step < n_steps:
            out.append((step, frac))
    return out


def integrate(system: DelaySystem, x0, t_max: float, dt: float) -> Trajectory:
    """Integrate ``system`` from ``X(0) = x0`` to ``t_max`` on the grid ``i*dt``.

    The grid is extended to the first node at or beyond ``t_max``.  Raises
    :class:`DivergedError` if the state stops being finite.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    if not t_max > 0:
        raise DomainError(f"t_max must be positive, got {t_max!r}")
    tau_min = system.min_delay
    if tau_min is not None and dt > tau_min * (1 + 1e-12):
        raise DomainError(f"dt={dt!r} exceeds the shortest delay {tau_min!r}")
    x0 = np.array(x0, dtype=complex).reshape(system.dim)

    n_steps = _step_count(t_max, dt)
    hist = HistoryBuffer(dt, system.dim, n_steps)
    hist.states[0] = x0
    A0 = system.A0
    P = _rk4_propagator(A0, dt)
    taus_u = np.array([tau / dt for tau, _ in system.delayed])
    mats_t = [Am.T for _, Am in system.delayed]
    disc = _off_grid_breaks(taus_u, n_steps)
    block = n_steps if tau_min is None else max(1, int(math.floor(tau_min / dt + _SNAP)))

    states = hist.states
    n = 0
    while n < n_steps:
        K = min(block, n_steps - n)
        idx = np.arange(n, n + K, dtype=float)
        forcing = []
        for c in (0.0, 0.5, 1.0):
            f = np.zeros((K, system.dim), dtype=complex)
            if len(taus_u):
                u = (idx + c)[:, None] - taus_u[None, :]
                # Theta(0) = 1, but a term switching on at the end of a step is
                # not active inside that step (left limit)
                active = u >= -_SNAP if c == 0.0 else u > _SNAP
                for m, At in enumerate(mats_t):
                    on = active[:, m]
                    if np.any(on):
                        f[on] += hist.eval_units(u[on, m]) @ At
            forcing.append(f)
        f0, fh, f1 = forcing
        drive = _rk4_forcing(A0, dt, f0, fh, f1)
        split = {}
        for step, frac in disc:
            if n <= step < n + K:
                split.setdefault(step - n, []).append(frac)
        layouts = {}
        for k, cuts in split.items():
            M, e, layouts[k] = _split_step(A0, dt, n + k, sorted(set(cuts)), taus_u, mats_t, hist)
            split[k] = (M, e)

        if system.dim == 2:
            p00, p01, p10, p11 = (complex(v) for v in P.ravel())
            a, b = complex(states[n, 0]), complex(states[n, 1])
            d0 = drive[:, 0].tolist()
            d1 = drive[:, 1].tolist()
            out0 = [0j] * K
            out1 = [0j] * K
            for k in range(K):
                if k in split:
                    M, e = split[k]
                    a, b = (M[0, 0] * a + M[0, 1] * b + e[0], M[1, 0] * a + M[1, 1] * b + e[1])
                else:
                    a, b = p00 * a + p01 * b + d0[k], p10 * a + p11 * b + d1[k]
                out0[k] = a
                out1[k] = b
            states[n + 1 : n + K + 1, 0] = out0
            states[n + 1 : n + K + 1, 1] = out1
        else:
            x = states[n].copy()
            for k in range(K):
                if k in split:
                    M, e = split[k]
                    x = M @ x + e
                else:
                    x = P @ x + drive[k]
                states[n + 1 + k] = x

        chunk = states[n + 1 : n + K + 1]
        if not np.all(np.isfinite(chunk)):
            bad = int(np.argmin(np.all(np.isfinite(chunk), axis=1)))
            raise DivergedError((n + 1 + bad) * dt)
        hist.d_start[n : n + K] = states[n : n + K] @ A0.T + f0
        hist.d_end[n : n + K] = chunk @ A0.T + f1
        for k, (edges, pieces) in layouts.items():
            hist.add_kinked_cell(n + k, edges, pieces, A0)
        n += K
        hist.n_current = n

    times = np.arange(n_steps + 1) * dt
    return Trajectory(
        times=times,
        states=states,
        dt=dt,
        meta={"system": repr(system), "description": system.description, "dt": dt},
        history=hist,
    )


def refine_until(
    system: DelaySystem,
    x0,
    t_max: float,
    tol: float,
    dt0: Optional[float] = None,
    max_halvings: int = 16,
) -> Trajectory:
    """Halve ``dt`` until successive runs differ by less than ``tol`` (max norm).

    The returned trajectory carries ``meta["refinement_error"]`` (last
    difference) and ``meta["refinements"]`` (number of halvings).
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if dt0 is None:
        tau_min = system.min_delay
        dt0 = (tau_min if tau_min is not None else t_max) / 100.0
    dt = dt0
    prev = integrate(system, x0, t_max, dt)
    if math.isinf(tol):
        prev.meta.update(refinement_error=math.inf, refinements=0)
        return prev
    for halving in range(1, max_halvings + 1):
        dt = dt / 2.0
        if dt <= 1e-14 * t_max:
            break
        cur = integrate(system, x0, t_max, dt)
        n = min(len(prev), (len(cur) + 1) // 2)
        err = float(np.max(np.abs(cur.states[: 2 * n - 1 : 2] - prev.states[:n])))
        if err < tol:
            cur.meta.update(refinement_error=err, refinements=halving)
            return cur
        prev = cur
    raise ConvergenceError(f"no convergence to tol={tol!r} down to dt={dt!r}")

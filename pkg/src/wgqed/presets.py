"""Parameter presets for the standard figure panels (fig2a ... fig5).

All presets use the a = 2b guide in natural units (b = c = 1).  The
emitter separation is ``n`` resonant wavelengths of TM11, so the TM11
phase is a multiple of 2 pi and ``gamma1 * tau1 = n * kappa`` where
``kappa = gamma1 * lambda1 / v1`` is the dimensionless coupling of the family.
"""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .errors import ConfigError, UnknownPresetError
from .scenarios import ScenarioSpec
from .waveguide import (
    TLSPair,
    WaveguideSpec,
    cutoff_frequency,
    group_velocity,
    midband_frequency,
    mode_interaction_params,
    resonant_wavenumber,
)

GUIDE = WaveguideSpec(a=2.0, b=1.0, c=1.0)

DELTAS_ONE_MODE = ("0", "gamma1", "2*gamma1", "5*gamma1")
DELTAS_FIG4A = ("0", "2*gamma2", "2*(gamma1+gamma2)", "5*(gamma1+gamma2)")
DELTAS_TWO_MODE = ("0", "1.5*gamma1+2*gamma2", "5*(gamma1+gamma2)")


@dataclass(frozen=True)
class Preset:
    name: str
    family: str  # "one-mode" or "two-mode"
    n: float
    initial: str
    deltas: tuple
    window: str  # "6tau1", "30/Gamma" or "tau1"
    summary: str


_ONE = dict(family="one-mode")
_TWO = dict(family="two-mode")
PRESETS = {
    p.name: p
    for p in [
        Preset("fig2a", n=1.0e9, initial="antisym", deltas=DELTAS_ONE_MODE, window="30/Gamma",
               summary="one mode, initial |a>, n = 1.0e9", **_ONE),
        Preset("fig2b", n=8.0e9, initial="antisym", deltas=DELTAS_ONE_MODE, window="6tau1",
               summary="one mode, initial |a>, n = 8.0e9", **_ONE),
        Preset("fig2c", n=8.0e10, initial="antisym", deltas=DELTAS_ONE_MODE, window="6tau1",
               summary="one mode, initial |a>, n = 8.0e10", **_ONE),
        Preset("fig3a", n=1.0e9, initial="sym", deltas=DELTAS_ONE_MODE, window="30/Gamma",
               summary="one mode, initial |s>, n = 1.0e9", **_ONE),
        Preset("fig3b", n=8.0e9, initial="sym", deltas=DELTAS_ONE_MODE, window="6tau1",
               summary="one mode, initial |s>, n = 8.0e9", **_ONE),
        Preset("fig4a", n=0.0, initial="antisym", deltas=DELTAS_FIG4A, window="30/Gamma",
               summary="two modes, initial |a>, d = 0", **_TWO),
        Preset("fig4b", n=3.1e9, initial="antisym", deltas=DELTAS_TWO_MODE, window="30/Gamma",
               summary="two modes, initial |a>, n = 3.1e9", **_TWO),
        Preset("fig4c", n=2.3e10, initial="antisym", deltas=DELTAS_TWO_MODE, window="6tau1",
               summary="two modes, initial |a>, n = 2.3e10", **_TWO),
        Preset("fig4d", n=1.8e12, initial="antisym", deltas=DELTAS_TWO_MODE, window="6tau1",
               summary="two modes, initial |a>, n = 1.8e12", **_TWO),
        Preset("fig5", n=2.3e10, initial="antisym", deltas=DELTAS_TWO_MODE, window="tau1",
               summary="two modes, s/a populations on [0, tau1] with the fig4c "
                       "parameters; use n = 1.8e12 for the fig4d ones", **_TWO),
    ]
}

FAMILIES = {
    "one-mode": dict(band=((1, 1), (3, 1)), modes=((1, 1),), kappa=1.5e-10),
    "two-mode": dict(band=((3, 1), (5, 1)), modes=((1, 1), (3, 1)), kappa=1.1e-11),
}

DELTA_LEGEND_NOTE = (
    "one-mode detunings quoted as multiples of 'gamma' are taken as multiples of gamma1"
)

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def evaluate_expression(expr: Union[str, float, int], names: Mapping[str, float]) -> float:
    """Evaluate an arithmetic expression such as ``"1.5*gamma1 + 2*gamma2"``.

    Only numbers, the given names, ``+ - * / **`` and parentheses are allowed.
    """
    if isinstance(expr, (int, float)) and not isinstance(expr, bool):
        return float(expr)
    try:
        tree = ast.parse(str(expr).strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ConfigError(f"unknown name {node.id!r} in {expr!r}; known: {sorted(names)}")
            return float(names[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"unsupported construct in {expr!r}")

    return ev(tree)


def family_modes(family: str, n: float):
    """Mode table for a preset family with the emitters ``n`` wavelengths apart."""
    fam = FAMILIES[family]
    lower, upper = fam["band"]
    omega_A = midband_frequency(GUIDE, lower, upper)
    W1 = cutoff_frequency(GUIDE, 1, 1)
    v1 = group_velocity(W1, omega_A, GUIDE.c)
    lam1 = 2 * math.pi / resonant_wavenumber(W1, omega_A, GUIDE.c)
    gamma1 = fam["kappa"] * v1 / lam1
    tls = TLSPair(omega_A=omega_A, wavelengths=n)
    window = (cutoff_frequency(GUIDE, *lower), cutoff_frequency(GUIDE, *upper))
    modes = mode_interaction_params(GUIDE, tls, window, modes=fam["modes"], gamma1=gamma1)
    return omega_A, modes


def scenario_names(modes) -> dict:
    """Symbols usable in delta / time expressions for a mode table."""
    names = {"gamma1": modes[0].gamma, "tau1": modes[0].tau}
    if len(modes) > 1:
        names.update(gamma2=modes[1].gamma, tau2=modes[1].tau)
    names["Gamma"] = math.fsum(m.gamma for m in modes)
    return names


def _window_t_max(window: str, names: Mapping[str, float]) -> float:
    if window == "30/Gamma" or names["tau1"] == 0:
        return 30.0 / names["Gamma"]
    if window == "tau1":
        return names["tau1"]
    return 6.0 * names["tau1"]


def preset(
    name: str,
    *,
    delta: Union[str, float, None] = None,
    n: Optional[float] = None,
    t_max: Union[str, float, None] = None,
    dt: Union[str, float, None] = None,
    tol: Optional[float] = None,
    initial: Optional[str] = None,
    basis: str = "bare",
) -> ScenarioSpec:
    """Scenario for a named figure panel, optionally with overrides.

    ``delta``, ``t_max`` and ``dt`` accept expressions in ``gamma1``,
    ``gamma2``, ``Gamma``, ``tau1`` and ``tau2``.  Without ``delta`` the first
    value of the panel's delta set (always 0) is used.
    """
    if name not in PRESETS:
        raise UnknownPresetError(f"unknown preset {name!r}; valid names: {', '.join(PRESETS)}")
    p = PRESETS[name]
    n_val = p.n if n is None else float(n)
    if n_val < 0:
        raise ConfigError("n must be >= 0")
    kappa = FAMILIES[p.family]["kappa"]
    omega_A, modes = family_modes(p.family, n_val)
    names = scenario_names(modes)
    delta_expr = p.deltas[0] if delta is None else delta
    delta_val = evaluate_expression(delta_expr, names)
    tmax_val = _window_t_max(p.window, names) if t_max is None else evaluate_expression(t_max, names)
    dt_val = None if dt is None else evaluate_expression(dt, names)

    meta = {
        "preset": name,
        "summary": p.summary,
        "omega_A": omega_A,
        "kappa_gamma1_lambda1_over_v1": kappa,
        "n_wavelengths": n_val,
        "gamma1_tau1": n_val * kappa,
        "gamma1": modes[0].gamma,
        "tau1": modes[0].tau,
        "delta_expr": str(delta_expr),
        "delta_over_gamma1": delta_val / modes[0].gamma,
        "delta_sweep": list(p.deltas),
        "delta_legend_note": DELTA_LEGEND_NOTE,
        "window": p.window if t_max is None else str(t_max),
        "time_axis": "t*Gamma" if n_val == 0 else "t/tau1",
    }
    if len(modes) > 1:
        meta.update(
            gamma2_over_gamma1=modes[1].gamma / modes[0].gamma,
            tau2_over_tau1=modes[0].v / modes[1].v,
            gamma2_tau2=n_val * kappa * (modes[1].gamma / modes[0].gamma) * (modes[0].v / modes[1].v),
            Gamma_tau1=n_val * kappa * (1 + modes[1].gamma / modes[0].gamma),
        )
    return ScenarioSpec(
        modes=tuple(modes),
        t_max=tmax_val,
        delta=delta_val,
        basis=basis,
        initial=p.initial if initial is None else initial,
        dt=dt_val,
        tol=tol,
        name=name,
        meta=meta,
    )

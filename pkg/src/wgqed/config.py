"""Run configuration documents.

A config is a flat YAML mapping.  Only ``modes`` (a list of ``[m, n]``
pairs) and ``sweep`` (``parameter`` plus ``values``) nest one level.
Either name a ``preset`` and optionally override some of its values::

    preset: fig2b
    delta: 2*gamma1
    format: csv
    output: fig2b_delta2.csv

or describe the system explicitly::

    a: 2.0
    b: 1.0
    omega_A: 7.0613
    modes: [[1, 1], [3, 1]]
    gamma1: 1.0e-3
    n: 2.3e10
    delta: 0
    t_max: 6*tau1

Expressions may use ``gamma1``, ``gamma2``, ``Gamma``, ``tau1``, ``tau2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from . import presets
from .errors import ConfigError, MutualExclusionError, WGQEDError
from .scenarios import ScenarioSpec
from .waveguide import TLSPair, WaveguideSpec, mode_interaction_params

PRESET_OVERRIDES = {"delta", "n", "t_max", "dt", "tol", "initial", "basis"}
EXPLICIT_ONLY = {"a", "b", "c", "omega_A", "modes", "gamma1", "mu1", "mu2", "d"}
RUN_KEYS = {"preset", "output", "format", "stride", "sweep", "jobs"}
KNOWN_KEYS = PRESET_OVERRIDES | EXPLICIT_ONLY | RUN_KEYS
SWEEP_PARAMETERS = ("delta", "n", "dt", "t_max")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class RunConfig:
    params: dict
    preset: Optional[str] = None
    output: Optional[str] = None
    format: str = "csv"
    stride: Optional[int] = None
    sweep: Optional[SweepSpec] = None
    jobs: int = 1
    scenario: ScenarioSpec = field(default=None, compare=False)

    def build(self, **override) -> ScenarioSpec:
        """Scenario with some parameters replaced (used by sweeps)."""
        params = dict(self.params)
        params.update(override)
        return _build_scenario(self.preset, params)


def _number(value, name, positive=False, integer=False):
    if isinstance(value, str):
        # YAML 1.1 reads "1e9" (no dot) as a string
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{name}: must be positive, got {value!r}")
    return int(value) if integer else float(value)


def _build_scenario(preset_name: Optional[str], params: dict) -> ScenarioSpec:
    try:
        if preset_name is not None:
            return presets.preset(preset_name, **{k: params[k] for k in PRESET_OVERRIDES if k in params})
        return _explicit_scenario(params)
    except ConfigError:
        raise
    except (WGQEDError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _explicit_scenario(params: dict) -> ScenarioSpec:
    for req in ("omega_A", "t_max"):
        if req not in params:
            raise ConfigError(f"{req}: required when no preset is given")
    guide = WaveguideSpec(
        a=_number(params.get("a", 2.0), "a", positive=True),
        b=_number(params.get("b", 1.0), "b", positive=True),
        c=_number(params.get("c", 1.0), "c", positive=True),
    )
    if "d" in params and "n" in params:
        raise MutualExclusionError("d, n: give the separation either as d or as n wavelengths")
    modes = params.get("modes")
    if modes is not None:
        if not isinstance(modes, list) or not all(
            isinstance(m, list) and len(m) == 2 and all(isinstance(i, int) for i in m) for m in modes
        ):
            raise ConfigError("modes: expected a list of [m, n] integer pairs")
        modes = [tuple(m) for m in modes]
    tls = TLSPair(
        omega_A=_number(params["omega_A"], "omega_A", positive=True),
        mu1=_number(params.get("mu1", 1.0), "mu1"),
        mu2=_number(params.get("mu2", 1.0), "mu2"),
        d=_number(params.get("d", 0.0), "d"),
        wavelengths=None if "n" not in params else _number(params["n"], "n"),
    )
    gamma1 = params.get("gamma1")
    table = mode_interaction_params(
        guide, tls, modes=modes,
        gamma1=None if gamma1 is None else _number(gamma1, "gamma1", positive=True),
    )
    names = presets.scenario_names(table)
    delta = presets.evaluate_expression(params.get("delta", 0.0), names)
    t_max = presets.evaluate_expression(params["t_max"], names)
    dt = params.get("dt")
    return ScenarioSpec(
        modes=tuple(table),
        t_max=t_max,
        delta=delta,
        basis=params.get("basis", "bare"),
        initial=params.get("initial", "antisym"),
        dt=None if dt is None else presets.evaluate_expression(dt, names),
        tol=params.get("tol"),
        name="custom",
        meta={"delta_expr": str(params.get("delta", 0.0)), "omega_A": tls.omega_A},
    )


def config_from_mapping(doc: Any) -> RunConfig:
    """Validate a parsed document and build the :class:`RunConfig`."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a mapping")
    unknown = sorted(set(doc) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key (allowed: {', '.join(sorted(KNOWN_KEYS))})")
    preset_name = doc.get("preset")
    if preset_name is not None:
        clash = sorted(set(doc) & EXPLICIT_ONLY)
        if clash:
            raise MutualExclusionError(
                f"{clash[0]}: cannot be combined with preset {preset_name!r}"
            )
        if preset_name not in presets.PRESETS:
            raise ConfigError(
                f"preset: unknown preset {preset_name!r}; valid names: {', '.join(presets.PRESETS)}"
            )
    fmt = doc.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format: must be csv or json, got {fmt!r}")
    stride = doc.get("stride")
    if stride is not None:
        stride = _number(stride, "stride", positive=True, integer=True)
    jobs = _number(doc.get("jobs", 1), "jobs", positive=True, integer=True)
    sweep = None
    if "sweep" in doc:
        raw = doc["sweep"]
        if not isinstance(raw, dict) or set(raw) != {"parameter", "values"}:
            raise ConfigError("sweep: expected a mapping with 'parameter' and 'values'")
        if raw["parameter"] not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep: parameter must be one of {SWEEP_PARAMETERS}")
        if not isinstance(raw["values"], list):
            raise ConfigError("sweep: values must be a list")
        sweep = SweepSpec(raw["parameter"], tuple(raw["values"]))
    params = {k: v for k, v in doc.items() if k not in RUN_KEYS}
    if "tol" in params:
        params["tol"] = _number(params["tol"], "tol", positive=True)
    scenario = _build_scenario(preset_name, params)
    return RunConfig(
        params=params, preset=preset_name, output=doc.get("output"), format=fmt,
        stride=stride, sweep=sweep, jobs=jobs, scenario=scenario,
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML config document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}{problem}") from exc
    return config_from_mapping(doc)

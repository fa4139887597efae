"""CSV / JSON emission of scenario results."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .scenarios import ScenarioResult

COLUMNS = (
    "t", "t_over_tau1", "re_B1", "im_B1", "re_B2", "im_B2",
    "P1", "P2", "C", "P_s", "P_a", "norm",
)
HEADER = ",".join(COLUMNS)
DEFAULT_POINTS = 2000


def default_stride(n_steps: int, points: int = DEFAULT_POINTS) -> int:
    """Largest stride that still leaves at least ``points`` intervals."""
    return max(1, n_steps // points)


def sample_indices(n_rows: int, stride: int) -> np.ndarray:
    """Every ``stride``-th row, always including the last one."""
    idx = np.arange(0, n_rows, stride)
    if idx[-1] != n_rows - 1:
        idx = np.append(idx, n_rows - 1)
    return idx


def result_columns(result: ScenarioResult, stride: Optional[int] = None) -> dict:
    """Column arrays for the output schema, sampled every ``stride`` steps."""
    bare = result.bare
    stride = stride or default_stride(len(bare) - 1)
    idx = sample_indices(len(bare), stride)
    t = bare.times[idx]
    B = bare.states[idx]
    obs = result.observables
    tau1 = result.spec.modes[0].tau
    if tau1 > 0:
        scaled = t / tau1
    else:
        G1, G2 = result.spec.decay_rates()
        scaled = t * 0.5 * (G1 + G2)
    return {
        "t": t,
        "t_over_tau1": scaled,
        "re_B1": B[:, 0].real,
        "im_B1": B[:, 0].imag,
        "re_B2": B[:, 1].real,
        "im_B2": B[:, 1].imag,
        "P1": obs.P1[idx],
        "P2": obs.P2[idx],
        "C": obs.C[idx],
        "P_s": obs.Ps[idx],
        "P_a": obs.Pa[idx],
        "norm": obs.norm[idx],
    }


def _mode_record(mode) -> dict:
    rec = {k: v for k, v in dataclasses.asdict(mode).items() if k != "index"}
    rec.update(
        m=mode.index.m, n=mode.index.n, j=mode.index.j, label=mode.index.label,
        wavelength=mode.wavelength, alpha_re=mode.alpha.real, alpha_im=mode.alpha.imag,
        gamma_tau=mode.gamma * mode.tau,
    )
    return rec


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def result_metadata(result: ScenarioResult, stride: int) -> dict:
    meta = dict(result.meta)
    meta["modes"] = [_mode_record(m) for m in result.spec.modes]
    meta["stride"] = stride
    meta["columns"] = list(COLUMNS)
    if result.spec.modes[0].tau == 0:
        meta["t_over_tau1_holds"] = "t*Gamma (tau1 = 0)"
    return _clean(meta)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit(result: ScenarioResult, fmt: str, path, stride: Optional[int] = None) -> Path:
    """Write ``result`` to ``path`` as ``csv`` or ``json``; byte-deterministic."""
    path = Path(path)
    stride = stride or default_stride(len(result.bare) - 1)
    cols = result_columns(result, stride)
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS)
            rows = zip(*(cols[c] for c in COLUMNS))
            writer.writerows([_fmt(v) for v in row] for row in rows)
    elif fmt == "json":
        doc = {
            "columns": {c: [float(v) for v in cols[c]] for c in COLUMNS},
            "metadata": result_metadata(result, stride),
        }
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1, allow_nan=False)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path

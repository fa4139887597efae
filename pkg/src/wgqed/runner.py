"""Execute run configurations and parameter sweeps."""
from __future__ import annotations

import json
import re
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import RunConfig
from .output import emit
from .scenarios import run_scenario


def run_config(cfg: RunConfig, output=None):
    """Run the configured scenario and write it; returns ``(result, path)``."""
    path = output or cfg.output
    if path is None:
        raise ValueError("no output path given")
    result = run_scenario(cfg.scenario)
    return result, emit(result, cfg.format, path, cfg.stride)


def _slug(value) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", str(value)).strip("_") or "value"


def sweep_paths(cfg: RunConfig, output=None) -> tuple[list[Path], Path]:
    base = Path(output or cfg.output or f"sweep.{cfg.format}")
    stem, suffix = base.stem, base.suffix or f".{cfg.format}"
    param = cfg.sweep.parameter
    files = [base.with_name(f"{stem}__{param}={_slug(v)}{suffix}") for v in cfg.sweep.values]
    if len(set(files)) != len(files):
        files = [
            base.with_name(f"{stem}__{i:03d}_{param}={_slug(v)}{suffix}")
            for i, v in enumerate(cfg.sweep.values)
        ]
    return files, base.with_name(f"{stem}__manifest.json")


def _sweep_item(cfg: RunConfig, value, path: Path) -> dict:
    spec = cfg.build(**{cfg.sweep.parameter: value})
    result = run_scenario(spec)
    emit(result, cfg.format, path, cfg.stride)
    return {
        "value": value,
        "file": path.name,
        "delta": result.meta["delta"],
        "dt": result.meta["dt"],
    }


def sweep(cfg: RunConfig, output=None) -> Path:
    """One output file per sweep value plus a JSON manifest listing them."""
    if cfg.sweep is None:
        raise ValueError("config has no sweep section")
    files, manifest = sweep_paths(cfg, output)
    values = cfg.sweep.values
    if cfg.jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            entries = list(pool.map(_sweep_item, [cfg] * len(values), values, files))
    else:
        entries = [_sweep_item(cfg, v, f) for v, f in zip(values, files)]
    doc = {
        "preset": cfg.preset,
        "parameter": cfg.sweep.parameter,
        "format": cfg.format,
        "outputs": entries,
    }
    with open(manifest, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return manifest

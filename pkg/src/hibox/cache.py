"""Disk cache for fine-mesh reference solutions.

Benchmarks without an analytic solution measure errors against a uniform
solve on a much finer mesh.  Those solves are expensive, so their sampled
values are cached on disk, keyed by a content hash of everything that
determines them (preset, mesh, problem data, sample grid).

The cache directory comes from the HIBOX_CACHE_DIR environment variable;
bundled reference files shipped next to the package data are used as a
read-only fallback.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .fem import solve_problem
from .presets import Preset, sample_grid

ENV_VAR = "HIBOX_CACHE_DIR"
_BUNDLED = Path(__file__).resolve().parents[2] / "data" / "reference"


def cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "hibox"


def reference_key(preset: Preset, levels: int, sample_levels: int) -> str:
    """Content hash of the reference problem: domain, map, data, grid."""
    prob = preset.problem(preset.finest_h(levels))
    payload = {
        "preset": preset.name,
        "map": preset.map_name,
        "h0": repr(preset.h0),
        "cells": sorted(preset.base_cells()),
        "levels": levels,
        "sample_levels": sample_levels,
        "kappa": prob.kappa,
        "advection": list(prob.advection),
        "eta": prob.eta,
        "delta": prob.delta,
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _paths(key: str) -> list[Path]:
    name = f"ref-{key}.npz"
    return [cache_dir() / name, _BUNDLED / name]


def lookup(key: str) -> np.ndarray | None:
    """Cached reference values for the key, or None."""
    for path in _paths(key):
        if path.is_file():
            with np.load(path) as data:
                return np.array(data["values"])
    return None


def store(key: str, values: np.ndarray, meta: dict | None = None) -> Path:
    path = cache_dir() / f"ref-{key}.npz"
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        path, values=np.asarray(values, float), meta=json.dumps(meta or {})
    )
    return path


def reference_values(
    preset: Preset,
    levels: int,
    sample_levels: int = 2,
    method: str = "auto",
) -> np.ndarray:
    """Reference solution sampled on the preset's sample grid.

    Solves uniformly at `levels` levels on a cache miss and stores the
    sampled values.
    """
    key = reference_key(preset, levels, sample_levels)
    cached = lookup(key)
    if cached is not None:
        return cached
    mesh = preset.uniform_mesh(levels)
    prob = preset.problem(preset.finest_h(levels))
    sol = solve_problem(prob, mesh, preset.gmap(), method=method)
    pts = sample_grid(preset, sample_levels)
    values = sol.evaluate(pts)
    store(
        key,
        values,
        meta={"preset": preset.name, "levels": levels, "dof": sol.dof},
    )
    return values


def list_entries() -> list[tuple[Path, dict]]:
    out = []
    for base in (cache_dir(), _BUNDLED):
        if not base.is_dir():
            continue
        for path in sorted(base.glob("ref-*.npz")):
            try:
                with np.load(path) as data:
                    meta = json.loads(str(data["meta"]))
            except Exception:
                meta = {}
            out.append((path, meta))
    return out


def clear() -> int:
    """Remove writable cache entries; bundled files are left alone."""
    base = cache_dir()
    n = 0
    if base.is_dir():
        for path in sorted(base.glob("ref-*.npz")):
            path.unlink()
            n += 1
    return n

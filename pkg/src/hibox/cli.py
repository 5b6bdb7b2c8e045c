"""Command-line interface: run benchmarks, report sizes, render, cache.

Subcommands:
  run         solve a preset over a range of level counts, write artifacts
  dof-report  basis and strip sizes without solving
  render      SVG of a preset mesh or boundary strip
  cache       manage cached reference solutions

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import cache as cache_mod
from .adapt import AdaptiveResult, adaptive_loop
from .config import ConfigError, RunConfig, load_config, serialize_config
from .fem import FemError, Solution, solve_problem
from .geometry import GeometryError
from .hierarchy import basis_for, export_mesh_lines
from .presets import (
    Preset,
    PresetError,
    preset_by_name,
    sample_grid,
    smoothed_step_data,
    supg_delta,
)
from .strip import build_strip, export_strip_lines, strip_flux_basis
from .svg import render_mesh_svg, render_strip_svg

_CONFIG_ERRORS = (ConfigError, PresetError, GeometryError)


def _fmt(value) -> str:
    """Shortest round-trip decimal for floats, plain text otherwise."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_lines(header: list[str], rows: list[list]) -> list[str]:
    return [",".join(header)] + [
        ",".join(_fmt(v) for v in row) for row in rows
    ]


def _make_problem(preset: Preset, cfg: RunConfig, finest_h: float):
    prob = preset.problem(finest_h)
    if preset.adaptive:
        # the boundary-data ramp width scales with the finest mesh size
        prob = dataclasses.replace(
            prob,
            dirichlet=smoothed_step_data(cfg.smoothing_width * finest_h),
        )
    return dataclasses.replace(
        prob,
        strip_kind=cfg.strip_kind,
        variant=cfg.variant,
        eta=cfg.eta,
        paper_literal_signs=cfg.paper_literal_signs,
    )


def _build_mesh(preset: Preset, cfg: RunConfig, levels: int):
    if cfg.mode == "uniform":
        return preset.uniform_mesh(levels)
    if cfg.mode == "predefined":
        return preset.hierarchical_mesh(levels)
    raise ConfigError(f"mode {cfg.mode} builds meshes adaptively")


@dataclasses.dataclass
class RunRow:
    levels: int
    finest_h: float
    dof: int
    strip_dof: int
    stats: dict


@dataclasses.dataclass
class RunResult:
    config: RunConfig
    preset: Preset
    rows: list[RunRow]
    solutions: list[Solution]
    adaptive: AdaptiveResult | None = None

    def table(self) -> list[str]:
        if self.preset.table_kind == "minmax":
            header = ["N", "h", "dof", "strip_dof", "max_value", "min_value"]
            rows = [
                [r.levels, r.finest_h, r.dof, r.strip_dof,
                 r.stats["max_value"], r.stats["min_value"]]
                for r in self.rows
            ]
        else:
            header = ["N", "h", "dof", "strip_dof", "max_error"]
            rows = [
                [r.levels, r.finest_h, r.dof, r.strip_dof, r.stats["max_error"]]
                for r in self.rows
            ]
        return _csv_lines(header, rows)


def _row_stats(preset: Preset, cfg: RunConfig, sol: Solution) -> dict:
    pts = sample_grid(preset, cfg.sample_levels)
    vals = sol.evaluate(pts)
    if preset.table_kind == "minmax":
        return {"max_value": float(vals.max()), "min_value": float(vals.min())}
    if preset.exact is not None:
        ref = preset.exact(sol.gmap.eval(pts))
    else:
        ref = cache_mod.reference_values(
            preset,
            cfg.effective_reference_levels(),
            cfg.sample_levels,
            method=cfg.method,
        )
    return {"max_error": float(np.max(np.abs(vals - ref)))}


def run_benchmark(cfg: RunConfig) -> RunResult:
    """Solve the preset for N = 1..levels and collect the table rows."""
    preset = preset_by_name(cfg.preset)
    rows: list[RunRow] = []
    solutions: list[Solution] = []
    adaptive = None
    if cfg.mode == "adaptive":
        finest_h = preset.finest_h(cfg.levels)
        prob = _make_problem(preset, cfg, finest_h)
        delta_rule = supg_delta if prob.delta > 0 else None
        adaptive = adaptive_loop(
            prob,
            preset.uniform_mesh(1),
            preset.gmap(),
            steps=cfg.levels - 1,
            threshold_rule=cfg.threshold_rule,
            delta_rule=delta_rule,
            method=cfg.method,
            interior_only=cfg.interior_marking,
        )
        solutions = [s.solution for s in adaptive.steps]
    else:
        for levels in range(1, cfg.levels + 1):
            mesh = _build_mesh(preset, cfg, levels)
            prob = _make_problem(preset, cfg, preset.finest_h(levels))
            solutions.append(
                solve_problem(prob, mesh, preset.gmap(), method=cfg.method)
            )
    for sol in solutions:
        mesh = sol.mesh
        rows.append(
            RunRow(
                levels=mesh.nlevels,
                finest_h=float(mesh.h(mesh.nlevels - 1)),
                dof=sol.dof,
                strip_dof=sol.strip_dof,
                stats=_row_stats(preset, cfg, sol),
            )
        )
    return RunResult(
        config=cfg, preset=preset, rows=rows, solutions=solutions,
        adaptive=adaptive,
    )


def _solution_grid_lines(preset: Preset, cfg: RunConfig, sol: Solution):
    pts = sample_grid(preset, cfg.sample_levels)
    phys = sol.gmap.eval(pts)
    vals = sol.evaluate(pts)
    rows = [
        [float(x), float(y), float(v)]
        for (x, y), v in zip(phys, vals)
    ]
    return _csv_lines(["x", "y", "value"], rows)


def write_artifacts(result: RunResult, outdir: Path) -> list[Path]:
    """Write all run artifacts; on failure no partial files are left."""
    cfg = result.config
    final = result.solutions[-1]
    files: dict[str, str] = {}
    files["table.csv"] = "\n".join(result.table()) + "\n"
    files["config.txt"] = serialize_config(cfg)
    mesh_lines = export_mesh_lines(final.mesh)
    for lev in range(final.mesh.nlevels):
        tag = f"{lev} "
        level_lines = [ln for ln in mesh_lines if ln.startswith(tag)]
        files[f"mesh_level{lev}.txt"] = "\n".join(level_lines) + "\n"
    files["strip.txt"] = "\n".join(export_strip_lines(final.strip)) + "\n"
    files["solution_grid.csv"] = (
        "\n".join(_solution_grid_lines(result.preset, cfg, final)) + "\n"
    )
    if cfg.svg:
        files["mesh.svg"] = render_mesh_svg(final.mesh, final.basis)
        files["strip.svg"] = render_strip_svg(final.strip)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name in sorted(files):
            path = outdir / name
            path.write_text(files[name])
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def dof_report(cfg: RunConfig) -> list[str]:
    """Basis and strip sizes for N = 1..levels, without solving."""
    preset = preset_by_name(cfg.preset)
    rows = []
    for levels in range(1, cfg.levels + 1):
        mesh = _build_mesh(preset, cfg, levels)
        basis = basis_for(mesh, cfg.variant)
        strip = build_strip(mesh, cfg.strip_kind)
        sbasis = strip_flux_basis(strip, cfg.variant)
        rows.append(
            [levels, float(mesh.h(mesh.nlevels - 1)), len(basis), len(sbasis)]
        )
    return _csv_lines(["N", "h", "dof", "strip_dof"], rows)


# ---------------------------------------------------------------------------
# argument parsing


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="configuration file (section.key = value)")
    p.add_argument("--preset", help="preset name")
    p.add_argument("--levels", type=int, help="number of levels N")
    p.add_argument(
        "--mode", choices=("uniform", "predefined", "adaptive"),
        help="refinement mode",
    )
    p.add_argument(
        "--strip", dest="strip_kind",
        choices=("fixed", "hbox", "thbox", "removal"), help="strip kind",
    )
    p.add_argument(
        "--basis", dest="variant", choices=("hbox", "thbox"),
        help="basis variant",
    )
    p.add_argument("--output", help="output directory")


def _config_from_args(args) -> RunConfig:
    overrides = {
        name: getattr(args, name, None)
        for name in ("preset", "levels", "mode", "strip_kind", "variant", "output")
    }
    if args.config:
        return load_config(args.config, overrides)
    from .config import parse_config

    return parse_config("", overrides)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hibox",
        description=(
            "Hierarchical box-spline solver for advection-diffusion "
            "problems with weak boundary conditions"
        ),
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a preset and write artifacts")
    _add_config_args(p_run)
    p_run.add_argument("--svg", action="store_true", help="also write SVG figures")

    p_dof = sub.add_parser("dof-report", help="basis/strip sizes without solving")
    _add_config_args(p_dof)

    p_render = sub.add_parser("render", help="render a mesh or strip as SVG")
    _add_config_args(p_render)
    p_render.add_argument(
        "--what", choices=("mesh", "strip"), default="mesh",
        help="what to draw",
    )
    p_render.add_argument("--out", required=True, help="output SVG path")
    p_render.add_argument(
        "--anchors", action="store_true", help="draw basis anchor markers"
    )

    p_cache = sub.add_parser("cache", help="manage cached reference solutions")
    p_cache.add_argument(
        "action", choices=("list", "build", "clear"), help="cache action"
    )
    _add_config_args(p_cache)
    return ap


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    if args.svg:
        cfg.svg = True
    result = run_benchmark(cfg)
    written = write_artifacts(result, Path(cfg.output))
    for line in result.table():
        print(line)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_dof_report(args) -> int:
    cfg = _config_from_args(args)
    for line in dof_report(cfg):
        print(line)
    return 0


def _cmd_render(args) -> int:
    cfg = _config_from_args(args)
    preset = preset_by_name(cfg.preset)
    if cfg.mode == "adaptive":
        raise ConfigError("render supports uniform and predefined modes only")
    mesh = _build_mesh(preset, cfg, cfg.levels)
    if args.what == "strip":
        text = render_strip_svg(build_strip(mesh, cfg.strip_kind))
    else:
        basis = basis_for(mesh, cfg.variant) if args.anchors else None
        text = render_mesh_svg(mesh, basis)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(f"wrote {out}")
    return 0


def _cmd_cache(args) -> int:
    if args.action == "list":
        for path, meta in cache_mod.list_entries():
            print(f"{path} {meta}")
        return 0
    if args.action == "clear":
        n = cache_mod.clear()
        print(f"removed {n} cache entries")
        return 0
    cfg = _config_from_args(args)
    preset = preset_by_name(cfg.preset)
    levels = cfg.reference_levels or cfg.levels
    cache_mod.reference_values(
        preset, levels, cfg.sample_levels, method=cfg.method
    )
    key = cache_mod.reference_key(preset, levels, cfg.sample_levels)
    print(f"cached {preset.name} reference at {levels} levels (key {key})")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "dof-report": _cmd_dof_report,
    "render": _cmd_render,
    "cache": _cmd_cache,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (FemError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Gradient-indicator adaptivity: estimate, mark, enlarge, refine, repeat.

The per-cell indicator is the L2 norm of the physical gradient of the
discrete solution.  Cells above a threshold are marked; the marked set is
dilated by two lattice steps at its own level so that at least one
next-level basis function fits completely inside the refined region over
every marked cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fem import ProblemSpec, Solution, solve_problem
from .geometry import GeometryMap
from .hierarchy import HierarchicalMesh, build_mesh
from .lattice import Cell, cell_children


@dataclass
class RefinementPlan:
    """Marked and enlarged cells per level for one refinement step."""

    marked: dict[int, set[Cell]]
    enlarged: dict[int, set[Cell]]
    threshold: float
    step: int = 0

    @property
    def empty(self) -> bool:
        return not any(self.marked.values())


def gradient_indicator(solution: Solution) -> dict:
    """Per active cell, the L2 norm of the physical solution gradient."""
    quad = solution.quad
    _, gpar = solution.evaluate(quad.par_points, order=1)
    gphys = np.einsum("qji,qj->qi", quad.jinv, gpar)
    dens = np.sum(gphys * gphys, axis=1) * quad.weights
    out = {}
    for i, key in enumerate(quad.cells):
        sl = quad.cell_slice(i)
        out[key] = float(np.sqrt(np.sum(dens[sl])))
    return out


def _threshold(values: np.ndarray, rule) -> float:
    if callable(rule):
        return float(rule(values))
    kind, par = rule
    if kind == "maxfrac":
        return float(par * values.max())
    if kind == "absolute":
        return float(par)
    if kind == "quantile":
        return float(np.quantile(values, par))
    raise ValueError(f"unknown threshold rule: {rule!r}")


def _interior_indicators(mesh: HierarchicalMesh, indicators: dict) -> dict:
    from .lattice import cell_vertices
    from .strip import _boundary_vertices

    bverts = [_boundary_vertices(dom) for dom in mesh.domain_at]
    return {
        (lev, cell): val
        for (lev, cell), val in indicators.items()
        if not any(v in bverts[lev] for v in cell_vertices(cell))
    }


def mark_and_enlarge(
    mesh: HierarchicalMesh,
    indicators: dict,
    threshold_rule=("maxfrac", 0.5),
    step: int = 0,
    interior_only: bool = False,
) -> RefinementPlan:
    """Mark cells above the threshold and dilate by two lattice steps.

    The dilation (clipped to the level's region) guarantees that at least
    one next-level translate has its full support inside the refinement
    added over each marked cell.

    With `interior_only`, cells whose closure touches the domain boundary
    are neither marked nor counted in the threshold: boundary mismatches
    are resolved by the strip flux, so refinement should chase interior
    features (sharp layers) instead of unresolvable boundary layers.
    """
    if interior_only:
        indicators = _interior_indicators(mesh, indicators)
    values = np.array(list(indicators.values()))
    thr = _threshold(values, threshold_rule) if len(values) else 0.0
    marked: dict[int, set[Cell]] = {}
    for (lev, cell), val in indicators.items():
        if val >= thr and val > 0:
            marked.setdefault(lev, set()).add(cell)
    enlarged: dict[int, set[Cell]] = {}
    for lev, cells in marked.items():
        region = mesh.regions[lev]
        grown: set[Cell] = set()
        for i, j, _ in cells:
            for di in range(-2, 3):
                for dj in range(-2, 3):
                    for o in (0, 1):
                        c = (i + di, j + dj, o)
                        if c in region:
                            grown.add(c)
        enlarged[lev] = grown
    return RefinementPlan(
        marked=marked, enlarged=enlarged, threshold=thr, step=step
    )


def apply_plan(mesh: HierarchicalMesh, plan: RefinementPlan) -> HierarchicalMesh:
    """Refine the mesh by the enlarged regions of the plan."""
    nlev = mesh.nlevels
    deepest = max(plan.enlarged, default=-1) + 2  # levels after refinement
    refines = []
    for lev in range(1, max(nlev, deepest)):
        reg = set(mesh.regions[lev]) if lev < nlev else set()
        if lev - 1 in plan.enlarged:
            for c in plan.enlarged[lev - 1]:
                reg.update(cell_children(c))
        refines.append(reg)
    return build_mesh(set(mesh.regions[0]), refines, h0=mesh.h0)


@dataclass
class AdaptiveStep:
    step: int
    mesh: HierarchicalMesh
    solution: Solution
    indicators: dict
    plan: RefinementPlan | None

    def report_row(self) -> dict:
        vals = np.array(list(self.indicators.values()))
        return {
            "step": self.step,
            "levels": self.mesh.nlevels,
            "finest_h": float(self.mesh.h(self.mesh.nlevels - 1)),
            "dof": self.solution.dof,
            "strip_dof": self.solution.strip_dof,
            "indicator_max": float(vals.max()),
            "indicator_min": float(vals.min()),
        }


@dataclass
class AdaptiveResult:
    steps: list[AdaptiveStep] = field(default_factory=list)

    @property
    def final_mesh(self) -> HierarchicalMesh:
        return self.steps[-1].mesh

    @property
    def final_solution(self) -> Solution:
        return self.steps[-1].solution

    def report_lines(self) -> list[str]:
        cols = (
            "step,levels,finest_h,dof,strip_dof,indicator_max,indicator_min"
        )
        out = [cols]
        for s in self.steps:
            row = s.report_row()
            out.append(
                "{step},{levels},{finest_h:.10g},{dof},{strip_dof},"
                "{indicator_max:.10g},{indicator_min:.10g}".format(**row)
            )
        return out


def adaptive_loop(
    problem: ProblemSpec,
    mesh: HierarchicalMesh,
    gmap: GeometryMap,
    steps: int,
    threshold_rule=("maxfrac", 0.5),
    delta_rule=None,
    method: str = "auto",
    interior_only: bool = False,
) -> AdaptiveResult:
    """Solve, estimate, mark and refine for a fixed number of steps.

    `delta_rule`, when given, recomputes the SUPG parameter from the mesh
    before each solve (it receives the current mesh).  The loop stops early
    when no cell is marked.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    result = AdaptiveResult()
    for step in range(steps + 1):
        if delta_rule is not None:
            problem.delta = float(delta_rule(mesh))
        sol = solve_problem(problem, mesh, gmap, method=method)
        ind = gradient_indicator(sol)
        plan = None
        if step < steps:
            plan = mark_and_enlarge(
                mesh, ind, threshold_rule, step=step, interior_only=interior_only
            )
        result.steps.append(
            AdaptiveStep(
                step=step, mesh=mesh, solution=sol, indicators=ind, plan=plan
            )
        )
        if plan is None or plan.empty:
            break
        mesh = apply_plan(mesh, plan)
    return result

"""Boundary strips for weak Dirichlet conditions, and the flux basis on them.

Three constructions: a fixed strip one coarse-cell row thick, and two
adaptive strips whose thickness follows the levels of the active (plain or
truncated) basis functions along the boundary.  All strips are canonically
compared through their finest-lattice cell sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .hierarchy import (
    BasisFunction,
    HierarchicalBasis,
    HierarchicalMesh,
    overlapping_shifts,
    support_cells,
    truncate,
    truncated_support_cells,
)
from .lattice import Cell, boundary_edges, cell_ancestor, cell_vertices, refine_cells

STRIP_KINDS = ("fixed", "hbox", "thbox")


class StripError(ValueError):
    pass


@dataclass
class BoundaryStrip:
    kind: str
    mesh: HierarchicalMesh
    fine_cells: frozenset[Cell]  # canonical form, cells at the finest level
    substrips: list[frozenset[Cell]] | None = None  # per level, level-l cells

    @property
    def finest(self) -> int:
        return self.mesh.nlevels - 1

    def native_cells(self) -> list[tuple[int, Cell]]:
        """Strip as whole cells of the hierarchical mesh."""
        out = []
        for lev, c in self.mesh.all_active():
            if refine_cells({c}, self.finest - lev) <= self.fine_cells:
                out.append((lev, c))
        return out

    def flux_regions(self) -> list[frozenset[Cell]]:
        """Per-level strip regions (strip intersected with each level's
        region), all expressed on the finest lattice."""
        out = [frozenset(self.fine_cells)]
        for lev in range(1, self.mesh.nlevels):
            reg = refine_cells(self.mesh.regions[lev], self.finest - lev)
            out.append(frozenset(self.fine_cells & reg))
        return out

    def area_fraction_cells(self) -> int:
        return len(self.fine_cells)


def _boundary_vertices(cells) -> set[tuple[int, int]]:
    verts: set[tuple[int, int]] = set()
    for a, b in boundary_edges(set(cells)):
        verts.add(a)
        verts.add(b)
    return verts


def _touching(cells, verts) -> set[Cell]:
    return {c for c in cells if any(v in verts for v in cell_vertices(c))}


def fixed_strip(mesh: HierarchicalMesh) -> BoundaryStrip:
    """Strip of fixed thickness h0: the row of level-0 cells touching the
    domain boundary, carried by the hierarchical mesh (2^l rows of level-l
    cells where the boundary is refined to level l)."""
    verts = _boundary_vertices(mesh.regions[0])
    row0 = _touching(mesh.regions[0], verts)
    fine = refine_cells(row0, mesh.nlevels - 1)
    return BoundaryStrip(kind="fixed", mesh=mesh, fine_cells=frozenset(fine))


def _adaptive_strip(
    mesh: HierarchicalMesh, basis: HierarchicalBasis, kind: str
) -> BoundaryStrip:
    """Union over levels of one-cell-row substrips of thickness h_l along
    the boundary parts covered by active level-l supports."""
    substrips: list[frozenset[Cell]] = []
    fine: set[Cell] = set()
    finest = mesh.nlevels - 1
    for lev in range(mesh.nlevels):
        dom = set(mesh.domain_at[lev])
        verts = _boundary_vertices(dom)
        boundary_cells = _touching(dom, verts)
        union_supp: set[Cell] = set()
        for f in basis.functions:
            if f.level != lev:
                continue
            if kind == "thbox":
                sc = truncated_support_cells(f, mesh.nlevels)
            else:
                sc = set(support_cells(f.shift))
            union_supp.update(sc & dom)
        sub = boundary_cells & union_supp
        substrips.append(frozenset(sub))
        fine |= refine_cells(sub, finest - lev)
    return BoundaryStrip(
        kind=kind, mesh=mesh, fine_cells=frozenset(fine), substrips=substrips
    )


def hbox_strip(mesh: HierarchicalMesh, hbasis: HierarchicalBasis) -> BoundaryStrip:
    if hbasis.variant != "hbox":
        raise StripError("hbox_strip expects a plain hierarchical basis")
    return _adaptive_strip(mesh, hbasis, "hbox")


def thbox_strip(mesh: HierarchicalMesh, thbasis: HierarchicalBasis) -> BoundaryStrip:
    if thbasis.variant != "thbox":
        raise StripError("thbox_strip expects a truncated basis")
    return _adaptive_strip(mesh, thbasis, "thbox")


def build_strip(mesh: HierarchicalMesh, kind: str, basis=None) -> BoundaryStrip:
    from .hierarchy import hbox_basis, thbox_basis

    if kind == "fixed":
        return fixed_strip(mesh)
    if kind == "hbox":
        return hbox_strip(mesh, basis if basis is not None else hbox_basis(mesh))
    if kind == "thbox":
        return thbox_strip(mesh, basis if basis is not None else thbox_basis(mesh))
    if kind == "removal":
        return remove_cells(mesh, fixed_strip(mesh))
    raise StripError(f"unknown strip kind: {kind}")


def remove_cells(mesh: HierarchicalMesh, fixed: BoundaryStrip) -> BoundaryStrip:
    """Cell-removal construction of the truncated-basis strip.

    Starting from the fixed strip, walk the levels from coarse to fine; a
    level-l cell inside the current strip is dropped when its closure does
    not touch the domain boundary and every level-l translate nonzero on it
    has its strip-restricted support inside the level-l part of the strip.
    """
    if fixed.kind != "fixed":
        raise StripError("remove_cells expects the fixed strip as input")
    finest = mesh.nlevels - 1
    fine = set(fixed.fine_cells)
    for lev in range(mesh.nlevels):
        reg_fine = refine_cells(mesh.regions[lev], finest - lev)
        strip_lev = fine & reg_fine  # level-l part of the strip, finest cells
        # level-l cells fully contained in the current strip
        cells_lev = {
            c
            for c in mesh.regions[lev]
            if refine_cells({c}, finest - lev) <= fine
        }
        bverts = _boundary_vertices(mesh.domain_at[lev])

        @lru_cache(maxsize=None)
        def supp_in_strip_level(shift, _lev=lev, _strip=frozenset(strip_lev)):
            s = refine_cells(support_cells(shift), finest - _lev) & fine
            return s <= _strip

        removed: set[Cell] = set()
        for c in sorted(cells_lev):
            if any(v in bverts for v in cell_vertices(c)):
                continue
            if all(supp_in_strip_level(s) for s in overlapping_shifts(c)):
                removed.add(c)
        for c in removed:
            fine -= refine_cells({c}, finest - lev)
    return BoundaryStrip(kind="removal", mesh=mesh, fine_cells=frozenset(fine))


# ---------------------------------------------------------------------------
# flux basis on the strip


def strip_flux_basis(strip: BoundaryStrip, variant: str) -> HierarchicalBasis:
    """Scalar hierarchical basis restricted to the strip.

    The strip plays the role of the domain; the per-level regions are the
    strip intersected with the volume regions, all handled on the finest
    lattice.  The vector flux space is two identical copies of this basis.
    """
    if variant not in ("hbox", "thbox"):
        raise ValueError(f"unknown basis variant: {variant}")
    mesh = strip.mesh
    nlev = mesh.nlevels
    finest = nlev - 1
    regions = strip.flux_regions()

    @lru_cache(maxsize=None)
    def supp_fine(level: int, shift) -> frozenset[Cell]:
        return frozenset(
            refine_cells(support_cells(shift), finest - level) & regions[0]
        )

    def removable(level: int, shift) -> bool:
        return supp_fine(level, shift) <= regions[level]

    funcs: list[BasisFunction] = []
    for lev in range(nlev):
        cand: set[tuple[int, int]] = set()
        for fc in regions[lev]:
            cand.update(overlapping_shifts(cell_ancestor(fc, finest - lev)))
        for shift in sorted(cand, key=lambda s: (s[1], s[0])):
            s = supp_fine(lev, shift)
            if not s or not s <= regions[lev]:
                continue
            if lev < finest and s <= regions[lev + 1]:
                continue
            f = BasisFunction(level=lev, shift=shift)
            if variant == "thbox":
                f = truncate(f, nlev, removable)
            funcs.append(f)
    return HierarchicalBasis(
        h0=mesh.h0, nlevels=nlev, functions=funcs, variant=variant
    )


def export_strip_lines(strip: BoundaryStrip) -> list[str]:
    out = [f"# kind {strip.kind}"]
    for lev, (i, j, o) in strip.native_cells():
        out.append(f"{lev} {i} {j} {'L' if o == 0 else 'U'}")
    return out

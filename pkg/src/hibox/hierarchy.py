"""Hierarchical meshes and (truncated) hierarchical box spline bases.

A hierarchical mesh is a nested sequence of cell sets on dyadically scaled
three-directional lattices.  The basis selects, per level, the translates
whose (domain-restricted) support fits the level's region but not the next
finer one; truncation removes the finer-level content of coarse functions
over refined regions, restoring the partition of unity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import boxspline
from .boxspline import QUARTIC, analyze, evaluate_fast_batch, subdivision_mask
from .lattice import Cell, cell_children, refine_cells

# support cells of the quartic generator, relative to its shift
SUPPORT_CELLS: tuple[Cell, ...] = tuple(sorted(boxspline._load_net().cells))

# translates nonzero on a cell, by orientation: offsets such that
# cell - offset is a valid shift
_OVERLAP_OFFSETS = {
    o: [(u, v) for (u, v, oo) in SUPPORT_CELLS if oo == o] for o in (0, 1)
}


def overlapping_shifts(cell: Cell) -> list[tuple[int, int]]:
    """Shifts of the 12 translates that are nonzero on a cell."""
    i, j, o = cell
    return [(i - u, j - v) for (u, v) in _OVERLAP_OFFSETS[o]]


def support_cells(shift: tuple[int, int]) -> list[Cell]:
    i, j = shift
    return [(i + u, j + v, o) for (u, v, o) in SUPPORT_CELLS]


class MeshError(ValueError):
    pass


@dataclass
class HierarchicalMesh:
    """Nested per-level cell sets; regions[l] holds level-l cells."""

    h0: Fraction
    regions: list[frozenset[Cell]]
    domain_at: list[frozenset[Cell]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.regions or not self.regions[0]:
            raise MeshError("empty level-0 domain")
        if not self.domain_at:
            dom = self.regions[0]
            self.domain_at = [dom]
            for _ in range(1, len(self.regions)):
                dom = frozenset(refine_cells(dom))
                self.domain_at.append(dom)

    @property
    def nlevels(self) -> int:
        return len(self.regions)

    def h(self, level: int) -> Fraction:
        return self.h0 / 2**level

    def active_cells(self, level: int) -> set[Cell]:
        """Level-l cells of the mesh not refined any further."""
        cells = self.regions[level]
        if level + 1 >= self.nlevels:
            return set(cells)
        finer = self.regions[level + 1]
        return {
            c for c in cells if not all(ch in finer for ch in cell_children(c))
        }

    def all_active(self) -> list[tuple[int, Cell]]:
        out = []
        for lev in range(self.nlevels):
            out.extend((lev, c) for c in sorted(self.active_cells(lev)))
        return out

    def finest_cells(self) -> set[Cell]:
        """All active cells expressed on the finest lattice."""
        out: set[Cell] = set()
        for lev in range(self.nlevels):
            out |= refine_cells(self.active_cells(lev), self.nlevels - 1 - lev)
        return out

    def cell_in_level_region(self, level: int, cell: Cell) -> bool:
        return cell in self.regions[level]

    def cell_fully_refined(self, level: int, cell: Cell) -> bool:
        """Whether a level-`level` cell lies inside the next finer region."""
        if level + 1 >= self.nlevels:
            return False
        finer = self.regions[level + 1]
        return all(ch in finer for ch in cell_children(cell))


def build_mesh(
    domain_cells,
    refine_regions=(),
    h0: Fraction | float = Fraction(1),
) -> HierarchicalMesh:
    """Assemble a hierarchical mesh from a level-0 domain and refine regions.

    refine_regions[k] is a set of level-(k+1) cells; input that is not
    nested inside the previous region (or that splits parent cells) is
    completed: it is intersected with the children of the parent region and
    rounded up to whole parent cells.
    """
    regions = [frozenset(domain_cells)]
    if not regions[0]:
        raise MeshError("empty level-0 domain")
    for k, reg in enumerate(refine_regions):
        parent_children = refine_cells(regions[k])
        reg = set(reg) & parent_children
        # complete to whole parent cells
        parents = {c for c in regions[k] if any(ch in reg for ch in cell_children(c))}
        completed = set()
        for p in parents:
            completed.update(cell_children(p))
        regions.append(frozenset(completed))
    # drop trailing empty regions
    while len(regions) > 1 and not regions[-1]:
        regions.pop()
    return HierarchicalMesh(h0=Fraction(h0), regions=regions)


# ---------------------------------------------------------------------------
# basis


@dataclass
class BasisFunction:
    level: int
    shift: tuple[int, int]
    kind: str = "plain"  # or "truncated"
    # correction terms subtracted by truncation: (level, shift) -> coeff
    removed: dict[tuple[int, tuple[int, int]], Fraction] = field(default_factory=dict)

    def anchor(self, h0: Fraction) -> tuple[Fraction, Fraction]:
        h = Fraction(h0) / 2**self.level
        return (h * (self.shift[0] + 2), h * (self.shift[1] + 2))

    def terms(self) -> list[tuple[int, tuple[int, int], float]]:
        """Flat list of (level, shift, coefficient) translate terms."""
        out = [(self.level, self.shift, 1.0)]
        for (m, j), c in self.removed.items():
            out.append((m, j, -float(c)))
        return out

    def evaluate(self, h0, points, order: int = 0):
        pts = np.atleast_2d(np.asarray(points, float))
        acc = None
        for m, j, c in self.terms():
            h = float(h0) / 2**m
            r = evaluate_fast_batch(pts, h, j, order)
            r = (r,) if order == 0 else r
            if acc is None:
                acc = [c * x for x in r]
            else:
                for k, x in enumerate(r):
                    acc[k] = acc[k] + c * x
        return acc[0] if order == 0 else tuple(acc)


@dataclass
class HierarchicalBasis:
    h0: Fraction
    nlevels: int
    functions: list[BasisFunction]
    variant: str  # "hbox" | "thbox"
    mesh: HierarchicalMesh | None = None

    def __len__(self) -> int:
        return len(self.functions)

    def anchors(self) -> list[tuple[Fraction, Fraction]]:
        return [f.anchor(self.h0) for f in self.functions]


def _restricted_support(mesh: HierarchicalMesh, level: int, shift) -> set[Cell]:
    """supp(beta) intersected with the domain, as level-`level` cells."""
    return set(support_cells(shift)) & set(mesh.domain_at[level])


def _selected(mesh: HierarchicalMesh, level: int, shift) -> bool:
    s = _restricted_support(mesh, level, shift)
    if not s:
        return False
    reg = mesh.regions[level]
    if not s <= reg:
        return False
    if level + 1 >= mesh.nlevels:
        return True
    finer = mesh.regions[level + 1]
    return not all(
        all(ch in finer for ch in cell_children(c)) for c in s
    )


def _level_candidates(mesh: HierarchicalMesh, level: int) -> set[tuple[int, int]]:
    cand: set[tuple[int, int]] = set()
    for c in mesh.regions[level]:
        cand.update(overlapping_shifts(c))
    return cand


def hbox_basis(mesh: HierarchicalMesh) -> HierarchicalBasis:
    """Hierarchical selection: support fits the level region, not the finer one."""
    funcs = []
    for lev in range(mesh.nlevels):
        for shift in sorted(_level_candidates(mesh, lev), key=lambda s: (s[1], s[0])):
            if _selected(mesh, lev, shift):
                funcs.append(BasisFunction(level=lev, shift=shift))
    return HierarchicalBasis(
        h0=mesh.h0, nlevels=mesh.nlevels, functions=funcs, variant="hbox", mesh=mesh
    )


# iterated dyadic masks: _iterated_mask(k)[s] = coefficient of the level-k
# translate s in the expansion of the level-0 generator
_MASK = {j: c for j, c in subdivision_mask(analyze(QUARTIC)).items()}
_MASK_ITER: list[dict] = [{(0, 0): Fraction(1)}, dict(_MASK)]


def _iterated_mask(k: int) -> dict:
    while len(_MASK_ITER) <= k:
        prev = _MASK_ITER[-1]
        nxt: dict = {}
        for j, cj in prev.items():
            for t, ct in _MASK.items():
                key = (2 * j[0] + t[0], 2 * j[1] + t[1])
                nxt[key] = nxt.get(key, Fraction(0)) + cj * ct
        _MASK_ITER.append(nxt)
    return _MASK_ITER[k]


def make_removable_predicate(mesh: HierarchicalMesh):
    """Predicate (level, shift) -> removable by truncation into that level.

    A translate is removable when its domain-restricted support lies inside
    the level's region; translates with empty domain overlap are removable
    vacuously.
    """

    @lru_cache(maxsize=None)
    def removable(level: int, shift) -> bool:
        s = set(support_cells(shift)) & set(mesh.domain_at[level])
        return s <= mesh.regions[level]

    return removable


def truncate(
    func: BasisFunction, nlevels: int, removable
) -> BasisFunction:
    """Iterated truncation of a basis function through all finer levels.

    Returns a function equal to the plain translate minus the correction
    terms: at every finer level, the expansion coefficients of translates
    fully supported in that level's region (per the `removable` predicate)
    are dropped.
    """
    removed: dict[tuple[int, tuple[int, int]], Fraction] = {}
    lev, (i0, j0) = func.level, func.shift
    for m in range(lev + 1, nlevels):
        k = m - lev
        sc = 2**k
        lo_i, lo_j = sc * i0, sc * j0
        hi = 4 * sc - 4  # offset range of the k-fold mask
        mk = _iterated_mask(k)
        for dj in range(hi + 1):
            for di in range(hi + 1):
                j = (lo_i + di, lo_j + dj)
                if not removable(m, j):
                    continue
                c = mk.get((di, dj), Fraction(0))
                for (mp, jp), r in removed.items():
                    scp = 2 ** (m - mp)
                    c -= r * _iterated_mask(m - mp).get(
                        (j[0] - scp * jp[0], j[1] - scp * jp[1]), Fraction(0)
                    )
                if c > 0:
                    removed[(m, j)] = c
    if not removed:
        return func
    return BasisFunction(level=lev, shift=func.shift, kind="truncated", removed=removed)


def thbox_basis(mesh: HierarchicalMesh) -> HierarchicalBasis:
    removable = make_removable_predicate(mesh)
    base = hbox_basis(mesh)
    funcs = [truncate(f, mesh.nlevels, removable) for f in base.functions]
    return HierarchicalBasis(
        h0=mesh.h0, nlevels=mesh.nlevels, functions=funcs, variant="thbox", mesh=mesh
    )


def basis_for(mesh: HierarchicalMesh, variant: str) -> HierarchicalBasis:
    if variant == "hbox":
        return hbox_basis(mesh)
    if variant == "thbox":
        return thbox_basis(mesh)
    raise ValueError(f"unknown basis variant: {variant}")


def truncated_support_cells(func: BasisFunction, nlevels: int) -> set[Cell]:
    """Support of a (possibly truncated) function as level-`func.level` cells.

    Exact: a support cell drops out iff all finest-level expansion
    coefficients of translates meeting the cell vanish; coefficients are
    non-negative, so no cancellation can hide support.
    """
    base = set(support_cells(func.shift))
    if not func.removed:
        return base
    top = nlevels - 1
    if func.level == top:
        return base
    coeffs = fine_expansion(func, top)
    covered: set[Cell] = set()
    for j, c in coeffs.items():
        if c > 0:
            covered.update(support_cells(j))
    out: set[Cell] = set()
    for c in base:
        if refine_cells({c}, top - func.level) & covered:
            out.add(c)
    return out


def fine_expansion(func: BasisFunction, m: int) -> dict:
    """Expansion coefficients of the function in level-m translates."""
    k = m - func.level
    sc = 2**k
    out = {
        (j[0] + sc * func.shift[0], j[1] + sc * func.shift[1]): c
        for j, c in _iterated_mask(k).items()
    }
    for (mp, jp), r in func.removed.items():
        if mp > m:
            continue
        scp = 2 ** (m - mp)
        for t, ct in _iterated_mask(m - mp).items():
            key = (t[0] + scp * jp[0], t[1] + scp * jp[1])
            out[key] = out.get(key, Fraction(0)) - r * ct
    return out


def evaluate_hierarchical(
    basis: HierarchicalBasis, coefficients, points, order: int = 0
):
    """Sum of coefficient-weighted basis functions at the given points."""
    coefficients = np.asarray(coefficients, float)
    if len(coefficients) != len(basis.functions):
        raise ValueError("coefficient/basis size mismatch")
    pts = np.atleast_2d(np.asarray(points, float))
    n = pts.shape[0]
    vals = np.zeros(n)
    grads = np.zeros((n, 2)) if order >= 1 else None
    hess = np.zeros((n, 2, 2)) if order >= 2 else None
    for c, f in zip(coefficients, basis.functions):
        if c == 0.0:
            continue
        r = f.evaluate(basis.h0, pts, order)
        if order == 0:
            vals += c * r
        else:
            vals += c * r[0]
            grads += c * r[1]
            if order >= 2:
                hess += c * r[2]
    if order == 0:
        return vals
    if order == 1:
        return vals, grads
    return vals, grads, hess


# ---------------------------------------------------------------------------
# text export


def export_mesh_lines(mesh: HierarchicalMesh) -> list[str]:
    out = []
    for lev, (i, j, o) in mesh.all_active():
        out.append(f"{lev} {i} {j} {'L' if o == 0 else 'U'}")
    return out


def export_basis_lines(basis: HierarchicalBasis) -> list[str]:
    out = []
    for f in basis.functions:
        out.append(f"{f.level} {f.shift[0]} {f.shift[1]} {f.kind}")
    return out

"""Integer triangle lattice: cell addressing, dyadic refinement, point location.

A three-directional mesh at scale h splits every square of the h-lattice
into a Lower and an Upper triangle along the SW-NE diagonal.  All cell
combinatorics here are exact integer arithmetic; the scale h only enters
when converting to/from real coordinates.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator

LOWER = 0
UPPER = 1

Cell = tuple[int, int, int]  # (i, j, orient)


def cell_vertices(cell: Cell) -> tuple[tuple[int, int], ...]:
    """Lattice-unit vertices of a cell."""
    i, j, o = cell
    if o == LOWER:
        return ((i, j), (i + 1, j), (i + 1, j + 1))
    return ((i, j), (i, j + 1), (i + 1, j + 1))


def cell_children(cell: Cell) -> tuple[Cell, Cell, Cell, Cell]:
    """The four sub-triangles of a cell under dyadic split."""
    i, j, o = cell
    if o == LOWER:
        return (
            (2 * i, 2 * j, LOWER),
            (2 * i + 1, 2 * j, LOWER),
            (2 * i + 1, 2 * j, UPPER),
            (2 * i + 1, 2 * j + 1, LOWER),
        )
    return (
        (2 * i, 2 * j, UPPER),
        (2 * i, 2 * j + 1, UPPER),
        (2 * i, 2 * j + 1, LOWER),
        (2 * i + 1, 2 * j + 1, UPPER),
    )


def cell_parent(cell: Cell) -> Cell:
    """The cell one level coarser that contains this cell."""
    i, j, o = cell
    pi, pj = i // 2, j // 2
    fi, fj = i - 2 * pi, j - 2 * pj
    if o == LOWER:
        # lower children of a lower parent: (0,0),(1,0),(1,1); (0,1) belongs
        # to an upper parent
        if (fi, fj) == (0, 1):
            return (pi, pj, UPPER)
        return (pi, pj, LOWER)
    if (fi, fj) == (1, 0):
        return (pi, pj, LOWER)
    return (pi, pj, UPPER)


def cell_ancestor(cell: Cell, levels_up: int) -> Cell:
    c = cell
    for _ in range(levels_up):
        c = cell_parent(c)
    return c


def refine_cells(cells: Iterable[Cell], levels_down: int = 1) -> set[Cell]:
    """Express a cell set on a lattice `levels_down` dyadic levels finer."""
    out = set(cells)
    for _ in range(levels_down):
        nxt: set[Cell] = set()
        for c in out:
            nxt.update(cell_children(c))
        out = nxt
    return out


def locate_cell(x: float, y: float) -> Cell:
    """Cell of the unit lattice containing (x, y).

    Ties: points on vertical/horizontal mesh lines go to the cell with the
    larger index, points on a diagonal go to the Upper triangle.
    """
    import math

    i = math.floor(x)
    j = math.floor(y)
    fx = x - i
    fy = y - j
    if fy < fx:
        return (i, j, LOWER)
    return (i, j, UPPER)


def locate_cell_exact(x: Fraction, y: Fraction) -> Cell:
    """Exact-arithmetic version of :func:`locate_cell`."""
    i = x.numerator // x.denominator
    j = y.numerator // y.denominator
    if y - j < x - i:
        return (i, j, LOWER)
    return (i, j, UPPER)


def barycentric(cell: Cell, x, y):
    """Barycentric coordinates of (x, y) w.r.t. the cell's vertex order.

    Works with scalars or numpy arrays; vertex order matches
    :func:`cell_vertices`.
    """
    i, j, o = cell
    fx = x - i
    fy = y - j
    if o == LOWER:
        return 1 - fx, fx - fy, fy
    return 1 - fy, fy - fx, fx


# Barycentric gradients (d lambda / dx, d lambda / dy) per orientation, on
# the unit lattice.
BARY_GRAD = {
    LOWER: ((-1.0, 1.0, 0.0), (0.0, -1.0, 1.0)),
    UPPER: ((0.0, -1.0, 1.0), (-1.0, 1.0, 0.0)),
}


def cell_centroid(cell: Cell) -> tuple[Fraction, Fraction]:
    vs = cell_vertices(cell)
    return (
        Fraction(sum(v[0] for v in vs), 3),
        Fraction(sum(v[1] for v in vs), 3),
    )


def cells_in_box(i0: int, j0: int, i1: int, j1: int) -> Iterator[Cell]:
    """All cells with square index in [i0, i1) x [j0, j1)."""
    for i in range(i0, i1):
        for j in range(j0, j1):
            yield (i, j, LOWER)
            yield (i, j, UPPER)


def cell_edges(cell: Cell) -> tuple[tuple[tuple[int, int], tuple[int, int]], ...]:
    """The three edges of a cell as ordered vertex pairs (CCW)."""
    v = cell_vertices(cell)
    if cell[2] == LOWER:
        return ((v[0], v[1]), (v[1], v[2]), (v[2], v[0]))
    return ((v[0], v[2]), (v[2], v[1]), (v[1], v[0]))


def boundary_edges(cells: set[Cell]) -> set[tuple[tuple[int, int], tuple[int, int]]]:
    """Undirected boundary edges of a cell set (each as a sorted vertex pair)."""
    seen: dict[tuple, int] = {}
    for c in cells:
        for a, b in cell_edges(c):
            key = (a, b) if a <= b else (b, a)
            seen[key] = seen.get(key, 0) + 1
    return {e for e, cnt in seen.items() if cnt == 1}

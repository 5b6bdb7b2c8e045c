import math
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from hibox.lattice import (
    LOWER,
    UPPER,
    barycentric,
    boundary_edges,
    cell_ancestor,
    cell_centroid,
    cell_children,
    cell_edges,
    cell_parent,
    cell_vertices,
    cells_in_box,
    locate_cell,
    locate_cell_exact,
    refine_cells,
)


def test_cell_vertices_orientation():
    assert cell_vertices((0, 0, LOWER)) == ((0, 0), (1, 0), (1, 1))
    assert cell_vertices((0, 0, UPPER)) == ((0, 0), (0, 1), (1, 1))


def test_children_tile_parent():
    for cell in [(0, 0, LOWER), (0, 0, UPPER), (-2, 3, LOWER), (5, -1, UPPER)]:
        kids = cell_children(cell)
        assert len(set(kids)) == 4
        # children exactly cover the parent: compare areas and containment
        pv = np.array(cell_vertices(cell), float) * 2
        for k in kids:
            kv = np.array(cell_vertices(k), float)
            c = kv.mean(axis=0)
            assert _in_triangle(c, pv)


def _in_triangle(p, tri):
    a, b, c = tri
    d1 = np.cross(b - a, p - a)
    d2 = np.cross(c - b, p - b)
    d3 = np.cross(a - c, p - c)
    return (d1 >= 0) == (d2 >= 0) == (d3 >= 0)


@given(
    st.integers(-8, 8), st.integers(-8, 8), st.sampled_from([LOWER, UPPER])
)
def test_parent_inverts_children(i, j, o):
    cell = (i, j, o)
    for k in cell_children(cell):
        assert cell_parent(k) == cell


def test_ancestor_composes():
    cell = (3, -2, UPPER)
    fine = refine_cells({cell}, 3)
    assert len(fine) == 64
    for f in fine:
        assert cell_ancestor(f, 3) == cell


@given(
    st.floats(-5, 5, allow_nan=False, allow_infinity=False),
    st.floats(-5, 5, allow_nan=False, allow_infinity=False),
)
@settings(max_examples=200)
def test_locate_contains_point(x, y):
    cell = locate_cell(x, y)
    lam = barycentric(cell, x, y)
    assert all(l >= -1e-12 for l in lam)
    assert math.isclose(sum(lam), 1.0, abs_tol=1e-12)


def test_locate_tie_rules():
    # diagonal goes to the upper triangle, mesh lines to the larger index
    assert locate_cell(0.5, 0.5) == (0, 0, UPPER)
    assert locate_cell(1.0, 0.5) == (1, 0, UPPER)
    # on the line y = 1 the point goes to square j = 1, lower triangle
    assert locate_cell(0.5, 1.0) == (0, 1, LOWER)
    assert locate_cell_exact(Fraction(1, 2), Fraction(1, 2)) == (0, 0, UPPER)
    assert locate_cell_exact(Fraction(3, 4), Fraction(1, 2)) == (0, 0, LOWER)


def test_centroid_locates_to_own_cell():
    for cell in cells_in_box(-2, -2, 2, 2):
        cx, cy = cell_centroid(cell)
        assert locate_cell_exact(cx, cy) == cell


def test_boundary_edges_of_box():
    cells = set(cells_in_box(0, 0, 3, 3))
    edges = boundary_edges(cells)
    # 3 per side on the axis sides, plus nothing on the diagonal interior
    assert len(edges) == 12
    for a, b in edges:
        assert a[0] in (0, 3) or a[1] in (0, 3) or b[0] in (0, 3) or b[1] in (0, 3)


def test_cell_edges_are_ccw():
    for cell in [(0, 0, LOWER), (0, 0, UPPER), (3, -1, LOWER), (-2, 4, UPPER)]:
        edges = cell_edges(cell)
        # the edge sequence is a closed loop
        for (a, b), (c, d) in zip(edges, edges[1:] + edges[:1]):
            assert b == c
        # shoelace over the loop is positive (counterclockwise)
        area2 = sum(a[0] * b[1] - b[0] * a[1] for a, b in edges)
        assert area2 > 0

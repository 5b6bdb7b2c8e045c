import numpy as np
import pytest

from hibox.geometry import (
    GeometryError,
    boundary_quadrature,
    gradient_pushforward,
    hessian_pushforward,
    identity_map,
    invert_map,
    map_by_name,
    polynomial_map,
    quarter_circle_map,
    triangle_hole_wave_map,
    zwave_map,
)
from hibox.hierarchy import build_mesh
from hibox.lattice import cells_in_box

RNG = np.random.default_rng(23)


def unit_triangle_cells(n):
    """Level-0 cells tiling the parametric triangle 0 <= r <= s <= 1."""
    upper = {(i, j, 1) for j in range(n) for i in range(j + 1)}
    lower = {(i, j, 0) for j in range(n) for i in range(j)}
    return upper | lower


def test_identity_map():
    m = identity_map()
    pts = RNG.uniform(-3, 3, size=(20, 2))
    assert np.allclose(m.eval(pts), pts)
    J = m.jacobian(pts)
    assert np.allclose(J, np.eye(2))
    assert np.allclose(m.hessian(pts), 0.0)


def test_map_by_name():
    assert map_by_name("zwave").kind == "ZWave"
    with pytest.raises(GeometryError):
        map_by_name("moebius")


def test_quarter_circle_left_leg_fixed():
    m = quarter_circle_map()
    s = np.linspace(0.02, 0.98, 25)
    pts = np.stack([np.zeros_like(s), s], axis=1)
    assert np.max(np.abs(m.eval(pts) - pts)) <= 1e-13


def test_quarter_circle_diagonal_hits_arc():
    m = quarter_circle_map()
    s = np.linspace(0.02, 0.98, 25)
    out = m.eval(np.stack([s, s], axis=1))
    resid = out[:, 0] ** 2 + (out[:, 1] - 1) ** 2 - 1
    assert np.max(np.abs(resid)) <= 1e-13


def test_quarter_circle_top_edge_fixed():
    m = quarter_circle_map()
    r = np.linspace(0.02, 0.98, 25)
    out = m.eval(np.stack([r, np.ones_like(r)], axis=1))
    assert np.max(np.abs(out - np.stack([r, np.ones_like(r)], axis=1))) <= 1e-13


def _interior_samples(kind, n=300):
    if kind == "qc":
        a = RNG.uniform(0.01, 0.99, size=(n, 2))
        return np.stack([a[:, 0] * a[:, 1], a[:, 1]], axis=1)
    if kind == "zwave":
        return RNG.uniform(0.01, 0.99, size=(n, 2)) * [9, 11]
    return RNG.uniform(0.01, 0.99, size=(n, 2)) * 16


def test_positive_jacobians():
    for kind, m in [
        ("qc", quarter_circle_map()),
        ("zwave", zwave_map()),
        ("trihole", triangle_hole_wave_map()),
    ]:
        d = np.linalg.det(m.jacobian(_interior_samples(kind)))
        assert d.min() > 0


def test_polynomial_map_affine():
    m = polynomial_map([(1, 0, 2)], [(0, 1, 3)])  # (r, s) -> (2r, 3s)
    pts = RNG.uniform(0, 1, size=(10, 2))
    assert np.allclose(m.eval(pts), pts * [2, 3])
    g = RNG.normal(size=(10, 2))
    pushed = gradient_pushforward(m, pts, g)
    assert np.allclose(pushed, g / [2, 3])


def test_gradient_pushforward_identity():
    m = identity_map()
    pts = RNG.uniform(0, 1, size=(10, 2))
    g = RNG.normal(size=(10, 2))
    assert np.allclose(gradient_pushforward(m, pts, g), g)


def test_gradient_pushforward_inverts_chain_rule():
    m = zwave_map()
    pts = _interior_samples("zwave", 100)
    g = RNG.normal(size=(100, 2))
    pushed = gradient_pushforward(m, pts, g)
    J = m.jacobian(pts)
    # J^T g_phys recovers the parametric gradient
    back = np.einsum("nki,nk->ni", J, pushed)
    assert np.max(np.abs(back - g)) <= 1e-12


def test_hessian_pushforward_fd():
    m = zwave_map()
    pts = _interior_samples("zwave", 40)

    def uhat(p):
        return np.sin(p[:, 0]) * np.cos(p[:, 1])

    def guhat(p):
        return np.stack(
            [np.cos(p[:, 0]) * np.cos(p[:, 1]), -np.sin(p[:, 0]) * np.sin(p[:, 1])],
            axis=1,
        )

    def huhat(p):
        h = np.empty((len(p), 2, 2))
        h[:, 0, 0] = -np.sin(p[:, 0]) * np.cos(p[:, 1])
        h[:, 0, 1] = -np.cos(p[:, 0]) * np.sin(p[:, 1])
        h[:, 1, 0] = h[:, 0, 1]
        h[:, 1, 1] = -np.sin(p[:, 0]) * np.cos(p[:, 1])
        return h

    H = hessian_pushforward(m, pts, guhat(pts), huhat(pts))
    x0 = m.eval(pts)
    eps = 3e-5

    def uphys(x):
        return uhat(invert_map(m, x, pts))

    steps = [np.array([eps, 0.0]), np.array([0.0, eps])]
    for i, d1 in enumerate(steps):
        for j, d2 in enumerate(steps):
            fd = (
                uphys(x0 + d1 + d2)
                - uphys(x0 + d1 - d2)
                - uphys(x0 - d1 + d2)
                + uphys(x0 - d1 - d2)
            ) / (4 * eps * eps)
            rel = np.abs(H[:, i, j] - fd) / (1 + np.abs(H[:, i, j]))
            assert np.max(rel) <= 1e-5


def test_invert_map_roundtrip():
    m = triangle_hole_wave_map()
    pts = _interior_samples("trihole", 60)
    phys = m.eval(pts)
    guess = pts + RNG.normal(scale=0.05, size=pts.shape)
    back = invert_map(m, phys, guess)
    assert np.max(np.abs(back - pts)) <= 1e-10


def test_boundary_quadrature_square():
    mesh = build_mesh(set(cells_in_box(0, 0, 4, 4)), [], h0=0.25)
    bq = boundary_quadrature(identity_map(), mesh, order=6)
    assert bq.total_weight == pytest.approx(4.0, abs=1e-12)
    # all normals are axis unit vectors pointing out of the unit square
    for p, nrm in zip(bq.par_points, bq.normals):
        assert sorted(np.abs(nrm)) == pytest.approx([0, 1], abs=1e-14)
        assert np.dot(nrm, p - [0.5, 0.5]) > 0


def test_boundary_quadrature_quarter_disk():
    mesh = build_mesh(unit_triangle_cells(4), [], h0=0.25)
    bq = boundary_quadrature(quarter_circle_map(), mesh, order=8)
    assert bq.total_weight == pytest.approx(2 + np.pi / 2, abs=1e-10)
    # normals on the arc are radial and outward
    on_arc = (
        np.abs(bq.phys_points[:, 0] ** 2 + (bq.phys_points[:, 1] - 1) ** 2 - 1)
        < 1e-10
    )
    rad = bq.phys_points[on_arc] - [0, 1]
    dots = np.sum(rad * bq.normals[on_arc], axis=1)
    assert np.min(dots) >= 1 - 1e-12


def test_boundary_quadrature_zwave_arclength():
    # oracle: dense trapezoid integration of |J t| along the square boundary
    dom = set(cells_in_box(0, 0, 9, 11))
    mesh = build_mesh(dom, [], h0=1)
    m = zwave_map()
    bq = boundary_quadrature(m, mesh, order=8)

    def side_length(a, b, n=20000):
        t = np.linspace(0, 1, n)[:, None]
        pts = np.asarray(a, float) + t * (np.asarray(b, float) - np.asarray(a, float))
        J = m.jacobian(pts)
        v = np.einsum("nij,j->ni", J, np.asarray(b, float) - np.asarray(a, float))
        sp = np.linalg.norm(v, axis=1)
        return np.trapezoid(sp, t[:, 0])

    expect = (
        side_length((0, 0), (9, 0))
        + side_length((9, 0), (9, 11))
        + side_length((9, 11), (0, 11))
        + side_length((0, 11), (0, 0))
    )
    assert bq.total_weight == pytest.approx(expect, abs=1e-7)


def test_boundary_quadrature_multilevel_consistency():
    from hibox.lattice import refine_cells

    dom = set(cells_in_box(0, 0, 4, 4))
    ref = refine_cells(set(cells_in_box(0, 0, 2, 2)))
    mesh = build_mesh(dom, [ref], h0=0.25)
    bq = boundary_quadrature(identity_map(), mesh, order=6)
    assert bq.total_weight == pytest.approx(4.0, abs=1e-12)
    levels = {lev for lev, _ in bq.cells}
    assert levels == {0, 1}

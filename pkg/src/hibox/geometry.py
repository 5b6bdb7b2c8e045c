"""Geometry maps from the parametric lattice domain to physical domains.

Maps are defined symbolically and lambdified once; Jacobians and Hessians
come from exact differentiation.  Physical-side gradients and Hessians of
mapped basis functions follow the usual chain rule, and map inversion (for
error sampling at physical points) is a Newton iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from .hierarchy import HierarchicalMesh
from .lattice import boundary_edges, cell_edges


class GeometryError(ValueError):
    pass


def _vectorize(fn: Callable, n: int):
    """Wrap a lambdified callable so scalar outputs broadcast to length n."""

    def run(r, s):
        out = fn(r, s)
        return np.broadcast_to(np.asarray(out, float), np.shape(r)).copy()

    return run


@dataclass
class GeometryMap:
    kind: str
    _fx: Callable = field(repr=False)
    _fy: Callable = field(repr=False)
    _jac: list = field(repr=False)  # 4 callables: dx/dr, dx/ds, dy/dr, dy/ds
    _hess: list = field(repr=False)  # 8 callables: per component rr, rs, sr, ss

    def eval(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, float))
        r, s = pts[:, 0], pts[:, 1]
        return np.stack([self._fx(r, s), self._fy(r, s)], axis=1)

    def jacobian(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, float))
        r, s = pts[:, 0], pts[:, 1]
        J = np.empty((len(pts), 2, 2))
        J[:, 0, 0] = self._jac[0](r, s)
        J[:, 0, 1] = self._jac[1](r, s)
        J[:, 1, 0] = self._jac[2](r, s)
        J[:, 1, 1] = self._jac[3](r, s)
        return J

    def hessian(self, points) -> np.ndarray:
        """Second derivatives of the map: out[n, k, i, j] = d2 F_k / dxi dxj."""
        pts = np.atleast_2d(np.asarray(points, float))
        r, s = pts[:, 0], pts[:, 1]
        H = np.empty((len(pts), 2, 2, 2))
        for k in range(2):
            H[:, k, 0, 0] = self._hess[4 * k + 0](r, s)
            H[:, k, 0, 1] = self._hess[4 * k + 1](r, s)
            H[:, k, 1, 0] = self._hess[4 * k + 2](r, s)
            H[:, k, 1, 1] = self._hess[4 * k + 3](r, s)
        return H


def _build(kind: str, xexpr, yexpr, r, s) -> GeometryMap:
    mods = ["numpy"]

    def lam(e):
        f = sp.lambdify((r, s), e, mods)
        return _vectorize(f, 0)

    jac = [
        lam(sp.diff(xexpr, r)),
        lam(sp.diff(xexpr, s)),
        lam(sp.diff(yexpr, r)),
        lam(sp.diff(yexpr, s)),
    ]
    hess = []
    for e in (xexpr, yexpr):
        for a in (r, s):
            for b in (r, s):
                hess.append(lam(sp.diff(e, a, b)))
    return GeometryMap(kind=kind, _fx=lam(xexpr), _fy=lam(yexpr), _jac=jac, _hess=hess)


def identity_map() -> GeometryMap:
    r, s = sp.symbols("r s")
    return _build("Identity", r, s, r, s)


def quarter_circle_map() -> GeometryMap:
    """Triangle {0 <= r <= s <= 1} onto the quarter disk of radius 1
    centered at (0, 1); the left leg r = 0 stays fixed and the diagonal
    r = s lands on the circular arc."""
    r, s = sp.symbols("r s")
    rho = sp.sqrt(r**2 + (s - 1) ** 2)
    factor = -r + s + rho - 2 * r * (s - 1) / rho
    x = factor * r
    y = factor * (s - 1) + 1
    return _build("QuarterCircle", x, y, r, s)


def zwave_map() -> GeometryMap:
    r, s = sp.symbols("r s")
    x = r / 9 - s**2 / 1210
    y = s / 11 + (14 * r**3 - 195 * r**2 + 600 * r) / 5000
    return _build("ZWave", x, y, r, s)


def triangle_hole_wave_map() -> GeometryMap:
    r, s = sp.symbols("r s")
    x = r / 16 + 9 * s**3 / 20480 - 27 * s**2 / 2560 + 9 * s / 160
    y = s / 16 - 9 * r**3 / 20480 + 27 * r**2 / 2560 - 9 * r / 160
    return _build("TriangleHoleWave", x, y, r, s)


def polynomial_map(xcoeffs, ycoeffs) -> GeometryMap:
    """Map from bivariate polynomial coefficient tables.

    Each table is an iterable of (i, j, c) meaning c * r^i * s^j.
    """
    r, s = sp.symbols("r s")
    x = sum(sp.Rational(str(c)) * r**i * s**j for i, j, c in xcoeffs)
    y = sum(sp.Rational(str(c)) * r**i * s**j for i, j, c in ycoeffs)
    return _build("UserPolynomial", x, y, r, s)


_PRESETS = {
    "identity": identity_map,
    "quarter_circle": quarter_circle_map,
    "zwave": zwave_map,
    "triangle_hole_wave": triangle_hole_wave_map,
}


def map_by_name(name: str, **kwargs) -> GeometryMap:
    if name == "polynomial":
        return polynomial_map(**kwargs)
    try:
        return _PRESETS[name]()
    except KeyError:
        raise GeometryError(f"unknown geometry map: {name}") from None


# ---------------------------------------------------------------------------
# pushforwards


def gradient_pushforward(gmap: GeometryMap, points, par_grads) -> np.ndarray:
    """Physical gradients J^{-T} g for parametric gradients g (n, 2)."""
    J = gmap.jacobian(points)
    g = np.atleast_2d(np.asarray(par_grads, float))
    Jinv = np.linalg.inv(J)
    return np.einsum("nji,nj->ni", Jinv, g)


def hessian_pushforward(
    gmap: GeometryMap, points, par_grads, par_hess
) -> np.ndarray:
    """Physical Hessians from parametric gradients (n,2) and Hessians (n,2,2).

    H_phys = J^{-T} (H_par - sum_k gphys_k * HessF_k) J^{-1}.
    """
    J = gmap.jacobian(points)
    Jinv = np.linalg.inv(J)
    gphys = np.einsum("nji,nj->ni", Jinv, np.atleast_2d(par_grads))
    HF = gmap.hessian(points)
    corr = np.asarray(par_hess, float) - np.einsum("nk,nkij->nij", gphys, HF)
    return np.einsum("nki,nkl,nlj->nij", Jinv, corr, Jinv)


def invert_map(gmap: GeometryMap, phys_points, guess, tol=1e-12, maxit=50):
    """Newton inversion of the map; `guess` holds parametric starting points."""
    x = np.atleast_2d(np.asarray(guess, float)).copy()
    target = np.atleast_2d(np.asarray(phys_points, float))
    for _ in range(maxit):
        res = gmap.eval(x) - target
        if np.max(np.abs(res)) < tol:
            break
        J = gmap.jacobian(x)
        x -= np.linalg.solve(J, res[..., None])[..., 0]
    else:
        raise GeometryError("map inversion did not converge")
    return x


# ---------------------------------------------------------------------------
# boundary quadrature


# Gauss-Legendre nodes on (0, 1) are taken from numpy at the requested order.
def _gauss01(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


@dataclass
class BoundaryQuadrature:
    par_points: np.ndarray  # (n, 2) parametric
    phys_points: np.ndarray  # (n, 2) mapped
    normals: np.ndarray  # (n, 2) outward unit normals in physical space
    weights: np.ndarray  # (n,) arc-length weights
    cells: list  # per point: (level, cell) owning the edge
    edges: list  # per point: parametric edge ((x0,y0),(x1,y1)) in level units

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


def boundary_quadrature(
    gmap: GeometryMap, mesh: HierarchicalMesh, order: int = 6
) -> BoundaryQuadrature:
    """Gauss rule along the mapped domain boundary, one panel per boundary
    edge of each active boundary cell (at the cell's own level)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    t, w = _gauss01(order)
    par_pts, cells, edges = [], [], []
    tangents = []
    base_w = []
    for lev in range(mesh.nlevels):
        h = float(mesh.h(lev))
        bedges = boundary_edges(set(mesh.domain_at[lev]))
        for c in sorted(mesh.active_cells(lev)):
            for a, b in cell_edges(c):
                key = (a, b) if a <= b else (b, a)
                if key not in bedges:
                    continue
                a_f = np.asarray(a, float) * h
                b_f = np.asarray(b, float) * h
                seg = b_f - a_f
                for tk, wk in zip(t, w):
                    par_pts.append(a_f + tk * seg)
                    tangents.append(seg)
                    base_w.append(wk)
                    cells.append((lev, c))
                    edges.append((a, b))
    if not par_pts:
        raise GeometryError("mesh has no boundary edges")
    par_pts = np.array(par_pts)
    tangents = np.array(tangents)
    base_w = np.array(base_w)
    phys = gmap.eval(par_pts)
    J = gmap.jacobian(par_pts)
    mapped_t = np.einsum("nij,nj->ni", J, tangents)
    speed = np.linalg.norm(mapped_t, axis=1)
    if np.any(speed <= 1e-15):
        raise GeometryError("degenerate mapped boundary edge")
    weights = base_w * speed
    # cell edges run counterclockwise, so the outward direction is the
    # mapped tangent rotated by -90 degrees
    normals = np.stack([mapped_t[:, 1], -mapped_t[:, 0]], axis=1)
    normals /= speed[:, None]
    return BoundaryQuadrature(
        par_points=par_pts,
        phys_points=phys,
        normals=normals,
        weights=weights,
        cells=cells,
        edges=edges,
    )

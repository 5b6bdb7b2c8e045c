"""Bivariate box splines: analysis, convolution oracle, masks, fast evaluation.

The slow reference path (`evaluate_oracle`) follows the inductive convolution
definition directly, splitting every 1-D integral at mesh-line crossings so
that Gauss quadrature is exact on each smooth piece.  The fast path evaluates
the C^2 quartic generator through its per-triangle Bernstein coefficients
(see `quartic_net`), which are validated against the oracle in the test
suite rather than trusted blindly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import BARY_GRAD, LOWER, UPPER

Vec2 = tuple[int, int]


# ---------------------------------------------------------------------------
# direction matrices and their analysis


@dataclass(frozen=True)
class DirectionMatrix:
    """Integer direction vectors defining a box spline (columns of the matrix)."""

    columns: tuple[Vec2, ...]

    def __post_init__(self):
        if len(self.columns) < 2:
            raise ValueError("need at least two direction vectors")
        for v in self.columns:
            if v == (0, 0):
                raise ValueError("zero direction vector")
            if not all(isinstance(c, int) for c in v):
                raise ValueError("direction vectors must be integer")
        a, b = self.columns[0], self.columns[1]
        if a[0] * b[1] - a[1] * b[0] == 0:
            raise ValueError("leading 2x2 block is singular")

    @property
    def n(self) -> int:
        return len(self.columns)


# Three-directional C^2 quartic generator.
QUARTIC = DirectionMatrix(((1, 0), (0, 1), (1, 1), (1, 0), (0, 1), (1, 1)))

# Two-directional generator of the bicubic tensor-product B-spline.
BICUBIC = DirectionMatrix(((1, 0), (0, 1)) * 4)


@dataclass(frozen=True)
class BoxSplineDescriptor:
    directions: DirectionMatrix
    degree: int
    smoothness: int
    support: tuple[tuple[Fraction, Fraction], ...]  # CCW polygon vertices
    anchor: tuple[Fraction, Fraction]

    @property
    def support_area(self) -> Fraction:
        area = Fraction(0)
        vs = self.support
        for k in range(len(vs)):
            x0, y0 = vs[k]
            x1, y1 = vs[(k + 1) % len(vs)]
            area += x0 * y1 - x1 * y0
        return area / 2


def check_unimodular(directions: DirectionMatrix) -> bool:
    """True iff every 2x2 submatrix has determinant in {-1, 0, 1}.

    This is the (local) linear-independence condition for the integer
    translates; it holds on two- and three-directional meshes but fails on
    four-directional ones.
    """
    cols = directions.columns
    for a, b in itertools.combinations(cols, 2):
        if abs(a[0] * b[1] - a[1] * b[0]) > 1:
            return False
    return True


def _spans_plane(cols) -> bool:
    for a, b in itertools.combinations(cols, 2):
        if a[0] * b[1] - a[1] * b[0] != 0:
            return True
    return False


def _convex_hull(points):
    """Andrew monotone chain on exact rational points, CCW orientation."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return tuple(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


def analyze(directions: DirectionMatrix) -> BoxSplineDescriptor:
    """Degree, smoothness, zonotope support and anchor of a box spline.

    Smoothness is rho - 2 where rho is the minimal number of columns whose
    removal leaves a set not spanning the plane (exhaustive subset search).
    """
    cols = directions.columns
    n = len(cols)
    rho = n
    for size in range(0, n + 1):
        found = False
        for keep in itertools.combinations(range(n), n - size):
            if not _spans_plane([cols[k] for k in keep]):
                found = True
                break
        if found:
            rho = size
            break
    corners = []
    for mask in range(1 << n):
        sx = sum(cols[k][0] for k in range(n) if mask >> k & 1)
        sy = sum(cols[k][1] for k in range(n) if mask >> k & 1)
        corners.append((Fraction(sx), Fraction(sy)))
    support = _convex_hull(corners)
    anchor = (
        Fraction(sum(v[0] for v in cols), 2),
        Fraction(sum(v[1] for v in cols), 2),
    )
    return BoxSplineDescriptor(
        directions=directions,
        degree=n - 2,
        smoothness=rho - 2,
        support=support,
        anchor=anchor,
    )


# ---------------------------------------------------------------------------
# convolution oracle


def _primitive_normal(v: Vec2) -> Vec2:
    g = math.gcd(abs(v[0]), abs(v[1]))
    return (-v[1] // g, v[0] // g)


def _gauss(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return x, w


def evaluate_oracle_many(
    directions: DirectionMatrix, points: np.ndarray, nodes: int | None = None
) -> np.ndarray:
    """Convolution-definition evaluation at an (m, 2) array of points.

    Each 1-D integral is split at every t where the moving point crosses a
    mesh line of the reduced direction set; per smooth sub-interval the
    integrand is polynomial, so Gauss quadrature with enough nodes is exact
    up to rounding.  `nodes=None` picks the minimal exact node count per
    level; pass a fixed count (e.g. 10) to over-integrate.
    """
    cols = directions.columns
    pts = np.atleast_2d(np.asarray(points, dtype=float))

    def level(k: int, p: np.ndarray) -> np.ndarray:
        if k == 2:
            a, b = cols[0], cols[1]
            det = a[0] * b[1] - a[1] * b[0]
            # solve [a b] y = p, require y in [0,1)^2
            y0 = (b[1] * p[:, 0] - b[0] * p[:, 1]) / det
            y1 = (-a[1] * p[:, 0] + a[0] * p[:, 1]) / det
            inside = (y0 >= 0) & (y0 < 1) & (y1 >= 0) & (y1 < 1)
            return inside / abs(det)

        v = cols[k - 1]
        normals = []
        seen = set()
        for u in cols[: k - 1]:
            w = _primitive_normal(u)
            wk = w if w > (0, 0) else (-w[0], -w[1])
            if wk in seen:
                continue
            seen.add(wk)
            a = wk[0] * v[0] + wk[1] * v[1]
            if a != 0:
                normals.append((wk, a))

        m = p.shape[0]
        cand_cols = []
        for (w, a) in normals:
            s = w[0] * p[:, 0] + w[1] * p[:, 1]
            lo = np.minimum(s, s - a)
            base = np.floor(lo) + 1
            for off in range(abs(a)):
                c = base + off
                t = (s - c) / a
                t = np.where((t > 0) & (t < 1), t, 0.0)
                cand_cols.append(t)
        knots = np.column_stack(
            cand_cols + [np.zeros(m), np.ones(m)]
        )
        knots.sort(axis=1)
        half = np.diff(knots, axis=1) / 2  # (m, S)
        mid = (knots[:, 1:] + knots[:, :-1]) / 2

        kg = nodes if nodes is not None else max(1, math.ceil((k - 2) / 2))
        gx, gw = _gauss(kg)
        # t samples: (m, S, kg)
        t = mid[:, :, None] + half[:, :, None] * gx[None, None, :]
        wgt = half[:, :, None] * gw[None, None, :]
        child = p[:, None, None, :] - t[..., None] * np.asarray(v, dtype=float)
        vals = level(k - 1, child.reshape(-1, 2)).reshape(t.shape)
        return (vals * wgt).sum(axis=(1, 2))

    return level(len(cols), pts)


def evaluate_oracle(
    descriptor: BoxSplineDescriptor, x, nodes: int | None = None
) -> float:
    """Scalar convolution-oracle evaluation (slow reference path)."""
    return float(
        evaluate_oracle_many(descriptor.directions, np.asarray(x, float)[None, :], nodes)[0]
    )


# ---------------------------------------------------------------------------
# two-scale (subdivision) mask


def subdivision_mask(descriptor: BoxSplineDescriptor) -> dict[Vec2, Fraction]:
    """Exact two-scale coefficients: M(x) = sum_j c_j M(2x - j).

    Coefficients of the Laurent polynomial 2^(d-n) prod_k (1 + z^{v_k});
    all non-negative, summing to 2^d = 4.
    """
    cols = descriptor.directions.columns
    coeffs: dict[Vec2, Fraction] = {(0, 0): Fraction(1)}
    for v in cols:
        nxt: dict[Vec2, Fraction] = {}
        for j, c in coeffs.items():
            for shift in ((0, 0), v):
                key = (j[0] + shift[0], j[1] + shift[1])
                nxt[key] = nxt.get(key, Fraction(0)) + c
        coeffs = nxt
    scale = Fraction(1, 2 ** (len(cols) - 2))
    return {j: c * scale for j, c in coeffs.items()}


# ---------------------------------------------------------------------------
# quartic Bernstein-Bezier fast path

MI4 = [(a, b, 4 - a - b) for a in range(4, -1, -1) for b in range(4 - a, -1, -1)]
MI3 = [(a, b, 3 - a - b) for a in range(3, -1, -1) for b in range(3 - a, -1, -1)]
MI2 = [(a, b, 2 - a - b) for a in range(2, -1, -1) for b in range(2 - a, -1, -1)]

_MULT4 = np.array([math.factorial(4) // (math.factorial(a) * math.factorial(b) * math.factorial(c)) for a, b, c in MI4], float)
_MULT3 = np.array([math.factorial(3) // (math.factorial(a) * math.factorial(b) * math.factorial(c)) for a, b, c in MI3], float)
_MULT2 = np.array([math.factorial(2) // (math.factorial(a) * math.factorial(b) * math.factorial(c)) for a, b, c in MI2], float)


def _bernstein_rows(mi, mult, u, v, w):
    """Array of Bernstein values, shape (npoints, len(mi))."""
    u = np.asarray(u, float)[..., None]
    v = np.asarray(v, float)[..., None]
    w = np.asarray(w, float)[..., None]
    a = np.array([m[0] for m in mi])
    b = np.array([m[1] for m in mi])
    c = np.array([m[2] for m in mi])
    return mult * u**a * v**b * w**c


def _deriv_matrix(mi_hi, mi_lo, d):
    """Map Bernstein coeffs of degree q to coeffs of the directional
    derivative of degree q-1, for barycentric direction d."""
    q = sum(mi_hi[0])
    idx = {m: k for k, m in enumerate(mi_hi)}
    D = np.zeros((len(mi_lo), len(mi_hi)))
    for r, g in enumerate(mi_lo):
        for m in range(3):
            e = list(g)
            e[m] += 1
            D[r, idx[tuple(e)]] += q * d[m]
    return D


# per-orientation derivative operators w.r.t. the unit lattice
_DX = {}
_DY = {}
_DXX = {}
_DXY = {}
_DYY = {}
for _o in (LOWER, UPPER):
    _dx, _dy = BARY_GRAD[_o]
    _DX[_o] = _deriv_matrix(MI4, MI3, _dx)
    _DY[_o] = _deriv_matrix(MI4, MI3, _dy)
    _dx3 = _deriv_matrix(MI3, MI2, _dx)
    _dy3 = _deriv_matrix(MI3, MI2, _dy)
    _DXX[_o] = _dx3 @ _DX[_o]
    _DXY[_o] = _dy3 @ _DX[_o]
    _DYY[_o] = _dy3 @ _DY[_o]


class QuarticNet:
    """Per-triangle Bernstein coefficients of the C^2 quartic generator.

    Coefficients are stored as integers scaled by 24; the table is derived
    from the convolution oracle (see scripts/derive_quartic_net.py) and
    cross-checked against it in the tests.
    """

    def __init__(self, table: dict[tuple[int, int, int], tuple[int, ...]]):
        self.cells = frozenset(table)
        self._coeff = {c: np.array(t, float) / 24.0 for c, t in table.items()}
        self._int = dict(table)

    def coeffs(self, cell) -> np.ndarray | None:
        return self._coeff.get(cell)

    def integer_coeffs(self, cell):
        return self._int.get(cell)


def _load_net() -> QuarticNet:
    from ._quartic_net import QUARTIC_NET_X24

    return QuarticNet(QUARTIC_NET_X24)


_NET: QuarticNet | None = None


def quartic_net() -> QuarticNet:
    global _NET
    if _NET is None:
        _NET = _load_net()
    return _NET


def evaluate_fast_batch(points: np.ndarray, h: float, shift: Vec2, order: int = 0):
    """Quartic translate M(x/h - shift) at an (n, 2) array of points.

    order=0 -> values (n,); order=1 -> (values, grads (n,2));
    order=2 -> (values, grads, hessians (n,2,2)).  Derivatives are w.r.t.
    the physical coordinates (scaled by 1/h per order).
    """
    net = quartic_net()
    pts = np.atleast_2d(np.asarray(points, float))
    u = pts / h - np.asarray(shift, float)
    n = pts.shape[0]
    vals = np.zeros(n)
    grads = np.zeros((n, 2)) if order >= 1 else None
    hess = np.zeros((n, 2, 2)) if order >= 2 else None

    ii = np.floor(u[:, 0]).astype(int)
    jj = np.floor(u[:, 1]).astype(int)
    fx = u[:, 0] - ii
    fy = u[:, 1] - jj
    oo = np.where(fy < fx, LOWER, UPPER)

    cells = np.stack([ii, jj, oo], axis=1)
    for cell in np.unique(cells, axis=0):
        key = (int(cell[0]), int(cell[1]), int(cell[2]))
        C = net.coeffs(key)
        if C is None:
            continue
        sel = np.all(cells == cell, axis=1)
        o = key[2]
        if o == LOWER:
            lam = (1 - fx[sel], fx[sel] - fy[sel], fy[sel])
        else:
            lam = (1 - fy[sel], fy[sel] - fx[sel], fx[sel])
        B4 = _bernstein_rows(MI4, _MULT4, *lam)
        vals[sel] = B4 @ C
        if order >= 1:
            B3 = _bernstein_rows(MI3, _MULT3, *lam)
            grads[sel, 0] = B3 @ (_DX[o] @ C) / h
            grads[sel, 1] = B3 @ (_DY[o] @ C) / h
        if order >= 2:
            B2 = _bernstein_rows(MI2, _MULT2, *lam)
            hxx = B2 @ (_DXX[o] @ C) / h**2
            hxy = B2 @ (_DXY[o] @ C) / h**2
            hyy = B2 @ (_DYY[o] @ C) / h**2
            hess[sel, 0, 0] = hxx
            hess[sel, 0, 1] = hxy
            hess[sel, 1, 0] = hxy
            hess[sel, 1, 1] = hyy

    if order == 0:
        return vals
    if order == 1:
        return vals, grads
    return vals, grads, hess


def evaluate_fast(x, h: float = 1.0, shift: Vec2 = (0, 0), order: int = 0):
    """Scalar/one-point version of :func:`evaluate_fast_batch`."""
    out = evaluate_fast_batch(np.asarray(x, float)[None, :], h, shift, order)
    if order == 0:
        return float(out[0])
    if order == 1:
        return float(out[0][0]), out[1][0]
    return float(out[0][0]), out[1][0], out[2][0]


def evaluate_cellwise(points, h, shift, cell, order=0):
    """Like evaluate_fast_batch but with the support cell (relative to the
    shift) known in advance; all points must lie in that cell."""
    net = quartic_net()
    C = net.coeffs(cell)
    n = np.atleast_2d(points).shape[0]
    if C is None:
        z = np.zeros(n)
        if order == 0:
            return z
        if order == 1:
            return z, np.zeros((n, 2))
        return z, np.zeros((n, 2)), np.zeros((n, 2, 2))
    pts = np.atleast_2d(np.asarray(points, float))
    u = pts / h - np.asarray(shift, float)
    i, j, o = cell
    fx = u[:, 0] - i
    fy = u[:, 1] - j
    if o == LOWER:
        lam = (1 - fx, fx - fy, fy)
    else:
        lam = (1 - fy, fy - fx, fx)
    B4 = _bernstein_rows(MI4, _MULT4, *lam)
    vals = B4 @ C
    if order == 0:
        return vals
    B3 = _bernstein_rows(MI3, _MULT3, *lam)
    grads = np.stack([B3 @ (_DX[o] @ C), B3 @ (_DY[o] @ C)], axis=1) / h
    if order == 1:
        return vals, grads
    B2 = _bernstein_rows(MI2, _MULT2, *lam)
    hxx = B2 @ (_DXX[o] @ C) / h**2
    hxy = B2 @ (_DXY[o] @ C) / h**2
    hyy = B2 @ (_DYY[o] @ C) / h**2
    hess = np.empty((len(vals), 2, 2))
    hess[:, 0, 0] = hxx
    hess[:, 0, 1] = hxy
    hess[:, 1, 0] = hxy
    hess[:, 1, 1] = hyy
    return vals, grads, hess


# ---------------------------------------------------------------------------
# polynomial reproduction


def polynomial_reproduction_check(
    descriptor: BoxSplineDescriptor, degree: int, window: int = 6, rng=None
) -> float:
    """Max pointwise residual of the best translate-basis fit of all
    monomials of total degree <= `degree` over an interior window.

    The fit is a plain least-squares collocation; for q <= rho-1 the
    residual vanishes up to rounding.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    sup = descriptor.support
    smax = max(int(v[0]) for v in sup)
    shifts = [
        (a, b)
        for a in range(-smax, window + 1)
        for b in range(-smax, window + 1)
    ]
    # interior sample points, away from the window edge by a full support
    pts = rng.uniform(1.0, window - 1.0, size=(400, 2))
    if descriptor.directions == QUARTIC:
        A = np.column_stack(
            [evaluate_fast_batch(pts, 1.0, s) for s in shifts]
        )
    else:
        A = np.column_stack(
            [
                evaluate_oracle_many(descriptor.directions, pts - np.asarray(s, float))
                for s in shifts
            ]
        )
    worst = 0.0
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            if a + b > degree:
                continue
            target = pts[:, 0] ** a * pts[:, 1] ** b
            coef, *_ = np.linalg.lstsq(A, target, rcond=None)
            res = np.max(np.abs(A @ coef - target))
            worst = max(worst, res)
    return worst

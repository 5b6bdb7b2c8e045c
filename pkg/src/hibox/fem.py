"""Quadrature, Galerkin assembly of the weak-boundary block system, and solve.

Dirichlet data is imposed weakly through an auxiliary flux unknown living on
the boundary strip.  The discrete system has a 2x2 block structure: volume
blocks (stiffness, advection, optional SUPG), strip blocks coupling the
solution and the flux, and boundary blocks carrying the Dirichlet data.  The
flux is eliminated by a Schur complement and the reduced sparse system is
solved by a direct factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .boxspline import evaluate_cellwise, evaluate_fast_batch
from .geometry import GeometryMap, _gauss01, boundary_quadrature
from .hierarchy import (
    SUPPORT_CELLS,
    HierarchicalBasis,
    HierarchicalMesh,
    overlapping_shifts,
)
from .lattice import LOWER, UPPER, cell_ancestor, cell_vertices, refine_cells
from .strip import BoundaryStrip


class FemError(RuntimeError):
    pass


def _as_field(f):
    """Normalize a constant or callable into a vectorized field on (n, 2)."""
    if callable(f):
        return lambda pts: np.asarray(f(np.atleast_2d(pts)), float).reshape(-1)
    val = float(f)
    return lambda pts: np.full(np.atleast_2d(pts).shape[0], val)


@dataclass
class ProblemSpec:
    """Advection-diffusion problem with weakly imposed Dirichlet data.

    kappa: diffusion coefficient, 0 < kappa <= 1.
    advection: constant velocity 2-vector.
    source, dirichlet: fields of the physical coordinates (callable or const).
    eta: penalty-like parameter, defaults to 2 / kappa.
    delta: SUPG stabilization parameter (0 switches stabilization off).
    strip_kind / variant: boundary strip construction and basis flavour.
    paper_literal_signs: keep the sign of the strip gradient/flux coupling as
    printed in the source formulation instead of the consistency-restoring
    default (see the patch test).
    """

    kappa: float = 1.0
    advection: tuple[float, float] = (0.0, 0.0)
    source: object = 0.0
    dirichlet: object = 0.0
    eta: float | None = None
    delta: float = 0.0
    strip_kind: str = "thbox"
    variant: str = "thbox"
    paper_literal_signs: bool = False

    def __post_init__(self):
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must satisfy 0 < kappa <= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.eta is None:
            self.eta = 2.0 / self.kappa

    def alpha(self, a_dot_n: np.ndarray) -> np.ndarray:
        """Boundary weight: -a.n on inflow, 0 elsewhere."""
        return np.where(a_dot_n < 0, -a_dot_n, 0.0)


# ---------------------------------------------------------------------------
# volume quadrature (Duffy-collapsed Gauss, exact for polynomial degree 8)

_DUFFY_ORDER = 5


def _duffy_rule():
    """Per-orientation local points and weights on the unit lattice cell."""
    x, w = _gauss01(_DUFFY_ORDER)
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    u, v = u.ravel(), v.ravel()
    ww = (wu * wv).ravel() * u  # collapsed-map Jacobian
    pts = {
        LOWER: np.stack([u, u * v], axis=1),
        UPPER: np.stack([u * v, u], axis=1),
    }
    return pts, ww


_DUFFY_PTS, _DUFFY_W = _duffy_rule()
_NQ = len(_DUFFY_W)


@dataclass
class VolumeQuadrature:
    """Physical quadrature over a list of active cells, _NQ points each."""

    cells: list  # (level, cell) per cell
    par_points: np.ndarray  # (n, 2)
    phys_points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,) physical weights (incl. |det J|)
    jinv: np.ndarray  # (n, 2, 2)
    hess_f: np.ndarray  # (n, 2, 2, 2) second derivatives of the map

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def cell_slice(self, i: int) -> slice:
        return slice(i * _NQ, (i + 1) * _NQ)


def volume_quadrature(
    mesh: HierarchicalMesh, gmap: GeometryMap, cells=None
) -> VolumeQuadrature:
    """Duffy-collapsed Gauss rule over the active cells of the mesh."""
    if cells is None:
        cells = mesh.all_active()
    par = np.empty((len(cells) * _NQ, 2))
    for i, (lev, (ci, cj, o)) in enumerate(cells):
        h = float(mesh.h(lev))
        par[i * _NQ : (i + 1) * _NQ] = (_DUFFY_PTS[o] + (ci, cj)) * h
    J = gmap.jacobian(par)
    det = np.linalg.det(J)
    if np.any(det <= 0):
        raise FemError("geometry map has non-positive Jacobian at quadrature")
    jinv = np.linalg.inv(J)
    weights = np.empty(len(par))
    for i, (lev, _) in enumerate(cells):
        h = float(mesh.h(lev))
        sl = slice(i * _NQ, (i + 1) * _NQ)
        weights[sl] = _DUFFY_W * h * h * det[sl]
    return VolumeQuadrature(
        cells=list(cells),
        par_points=par,
        phys_points=gmap.eval(par),
        weights=weights,
        jinv=jinv,
        hess_f=gmap.hessian(par),
    )


# ---------------------------------------------------------------------------
# translate bookkeeping

TranslateKey = tuple[int, tuple[int, int]]


def translate_index(basis: HierarchicalBasis) -> dict:
    """Map (level, shift) -> [(row, coefficient)] linearizing the basis.

    Each (possibly truncated) basis function is a signed combination of
    lattice translates; assembly works per translate and scatters into the
    referencing rows.
    """
    index: dict[TranslateKey, list] = {}
    for row, f in enumerate(basis.functions):
        for m, shift, coef in f.terms():
            index.setdefault((m, shift), []).append((row, coef))
    return index


def _cell_keys(lev: int, cell, index: dict) -> list[TranslateKey]:
    """Translate keys of `index` that are nonzero on an active cell."""
    keys = []
    for m in range(lev + 1):
        anc = cell_ancestor(cell, lev - m)
        for s in overlapping_shifts(anc):
            if (m, s) in index:
                keys.append((m, s))
    return keys


@lru_cache(maxsize=None)
def _pattern(k: int, di: int, dj: int, o: int):
    """Level-(lev-k) translate on the Duffy points of a level-lev cell.

    Values plus derivatives with respect to the level-lev lattice units for
    the relative cell offset (di, dj, o) = cell - 2^k * shift.
    """
    pts = _DUFFY_PTS[o] + (di, dj)
    return evaluate_fast_batch(pts, float(2**k), (0, 0), order=2)


@lru_cache(maxsize=None)
def _stacked_tables(o: int, rel: tuple):
    """Stacked (nq, T), (nq, T, 2), (nq, T, 2, 2) tables for a key pattern."""
    vals, grads, hess = [], [], []
    for k, di, dj in rel:
        v, g, h = _pattern(k, di, dj, o)
        vals.append(v)
        grads.append(g)
        hess.append(h)
    return (
        np.stack(vals, axis=1),
        np.stack(grads, axis=1),
        np.stack(hess, axis=1),
    )


def _local_tables(lev: int, cell, keys):
    i, j, o = cell
    rel = tuple(
        (lev - m, i - (2 ** (lev - m)) * s[0], j - (2 ** (lev - m)) * s[1])
        for m, s in keys
    )
    return _stacked_tables(o, rel)


def _rows_for(keys, index):
    """Flatten translate keys into (row, local-column, coefficient) arrays."""
    rr, tt, cc = [], [], []
    for t, key in enumerate(keys):
        for row, coef in index[key]:
            rr.append(row)
            tt.append(t)
            cc.append(coef)
    return np.array(rr, int), np.array(tt, int), np.array(cc, float)


class _Triplets:
    def __init__(self):
        self.r, self.c, self.v = [], [], []

    def add(self, rows, cols, vals):
        self.r.append(np.ravel(rows))
        self.c.append(np.ravel(cols))
        self.v.append(np.ravel(vals))

    def matrix(self, shape):
        if not self.r:
            return sps.csr_matrix(shape)
        coo = sps.coo_matrix(
            (
                np.concatenate(self.v),
                (np.concatenate(self.r), np.concatenate(self.c)),
            ),
            shape=shape,
        )
        return coo.tocsr()


def _scatter_pair(trip, loc, rows1, rows2):
    rr1, tt1, cc1 = rows1
    rr2, tt2, cc2 = rows2
    vals = (cc1[:, None] * cc2[None, :]) * loc[np.ix_(tt1, tt2)]
    trip.add(
        np.repeat(rr1, len(rr2)), np.tile(rr2, len(rr1)), vals
    )


def _scatter_vec(vec, loc, rows):
    rr, tt, cc = rows
    np.add.at(vec, rr, cc * loc[tt])


# ---------------------------------------------------------------------------
# block system


@dataclass
class BlockSystem:
    """Assembled blocks of the weak-boundary formulation.

    Row/column convention: entry [i, j] tests with function i and takes the
    trial function j.  Flux degrees of freedom are stacked component-wise:
    the x copy of the scalar strip basis first, then the y copy.
    """

    n: int  # volume dof
    m: int  # scalar strip dof (vector flux dof = 2 m)
    K_uu: sps.csr_matrix
    A_uu: sps.csr_matrix
    Kin_uu: sps.csr_matrix
    G_uu: sps.csr_matrix
    S1: sps.csr_matrix
    S2: sps.csr_matrix
    K_us: sps.csr_matrix
    G_us: sps.csr_matrix
    K_su: sps.csr_matrix
    G_su: sps.csr_matrix
    K_ss: sps.csr_matrix
    f_u: np.ndarray
    g_ug: np.ndarray
    s_f: np.ndarray
    g_sg: np.ndarray

    @property
    def lhs_uu(self) -> sps.csr_matrix:
        return self.K_uu + self.A_uu + self.Kin_uu + self.G_uu + self.S1 + self.S2

    @property
    def B_us(self) -> sps.csr_matrix:
        return self.K_us + self.G_us

    @property
    def B_su(self) -> sps.csr_matrix:
        return self.K_su + self.G_su

    @property
    def rhs_u(self) -> np.ndarray:
        return self.f_u + self.g_ug + self.s_f

    def monolithic(self):
        """Full (n + 2m) sparse matrix and right-hand side."""
        A = sps.bmat(
            [[self.lhs_uu, self.B_us], [self.B_su, self.K_ss]], format="csc"
        )
        b = np.concatenate([self.rhs_u, self.g_sg])
        return A, b

    def export_coo_lines(self, name: str) -> list[str]:
        """Matrix block in `row col value` text form for debugging."""
        mat = getattr(self, name).tocoo()
        return [
            f"{r} {c} {v:.17g}"
            for r, c, v in sorted(zip(mat.row, mat.col, mat.data))
        ]


def assemble(
    problem: ProblemSpec,
    mesh: HierarchicalMesh,
    basis: HierarchicalBasis,
    strip: BoundaryStrip,
    strip_basis: HierarchicalBasis,
    gmap: GeometryMap,
    quad: VolumeQuadrature | None = None,
    bquad=None,
    boundary_order: int = 6,
) -> BlockSystem:
    """Assemble all blocks of the weak-boundary system by quadrature.

    Volume terms run over all active cells, strip terms only over the cells
    of the boundary strip, boundary terms over the mapped domain boundary.
    SUPG blocks are assembled only when problem.delta > 0.
    """
    n, msz = len(basis), len(strip_basis)
    idx_v = translate_index(basis)
    idx_w = translate_index(strip_basis)
    if quad is None:
        quad = volume_quadrature(mesh, gmap)
    if bquad is None:
        bquad = boundary_quadrature(gmap, mesh, order=boundary_order)
    strip_cells = set(strip.native_cells())
    a = np.asarray(problem.advection, float)
    has_adv = bool(np.any(a != 0.0))
    kappa, eta, delta = problem.kappa, problem.eta, problem.delta
    su_sign = -1.0 if problem.paper_literal_signs else 1.0
    f_field = _as_field(problem.source)
    g_field = _as_field(problem.dirichlet)
    fvals = f_field(quad.phys_points)

    names = (
        "K_uu", "A_uu", "Kin_uu", "G_uu", "S1", "S2",
        "K_us", "G_us", "K_su", "G_su", "K_ss",
    )
    trip = {name: _Triplets() for name in names}
    f_u = np.zeros(n)
    s_f = np.zeros(n)
    g_ug = np.zeros(n)
    g_sg = np.zeros(2 * msz)

    # volume + strip passes, cell by cell
    for i, (lev, cell) in enumerate(quad.cells):
        keys = _cell_keys(lev, cell, idx_v)
        if not keys:
            raise FemError(f"no basis function covers active cell {cell}")
        h = float(mesh.h(lev))
        sl = quad.cell_slice(i)
        V, Gl, _ = _local_tables(lev, cell, keys)
        rows = _rows_for(keys, idx_v)
        W = quad.weights[sl]
        # physical gradients: J^{-T} (parametric gradient)
        gphys = np.einsum("qji,qtj->qti", quad.jinv[sl], Gl) / h
        _scatter_pair(
            trip["K_uu"],
            kappa * np.einsum("q,qti,qsi->ts", W, gphys, gphys),
            rows,
            rows,
        )
        _scatter_vec(f_u, (W * fvals[sl]) @ V, rows)
        if has_adv:
            adotg = gphys @ a
            _scatter_pair(
                trip["A_uu"], np.einsum("q,qt,qs->ts", W, V, adotg), rows, rows
            )
            if delta > 0:
                _, _, Hl = _local_tables(lev, cell, keys)
                hpar = Hl / (h * h)
                corr = hpar - np.einsum("qtk,qkij->qtij", gphys, quad.hess_f[sl])
                # trace of the physical Hessian J^{-T} corr J^{-1}
                lap = np.einsum(
                    "qki,qtkl,qli->qt", quad.jinv[sl], corr, quad.jinv[sl]
                )
                _scatter_pair(
                    trip["S1"],
                    delta * np.einsum("q,qt,qs->ts", W, adotg, -kappa * lap),
                    rows,
                    rows,
                )
                _scatter_pair(
                    trip["S2"],
                    delta * np.einsum("q,qt,qs->ts", W, adotg, adotg),
                    rows,
                    rows,
                )
                _scatter_vec(s_f, delta * (W * fvals[sl]) @ adotg, rows)
        if (lev, cell) in strip_cells:
            _scatter_pair(
                trip["Kin_uu"],
                -(kappa / eta) * np.einsum("q,qti,qsi->ts", W, gphys, gphys),
                rows,
                rows,
            )
            keys_w = _cell_keys(lev, cell, idx_w)
            if not keys_w:
                raise FemError(f"no flux function covers strip cell {cell}")
            Vw, _, _ = _local_tables(lev, cell, keys_w)
            rows_w = _rows_for(keys_w, idx_w)
            mass_w = np.einsum("q,qt,qs->ts", W, Vw, Vw)
            for k in range(2):
                rows_wk = (rows_w[0] + k * msz, rows_w[1], rows_w[2])
                _scatter_pair(
                    trip["K_us"],
                    (1.0 / eta)
                    * np.einsum("q,qt,qs->ts", W, gphys[:, :, k], Vw),
                    rows,
                    rows_wk,
                )
                _scatter_pair(
                    trip["K_su"],
                    su_sign
                    * (1.0 / eta)
                    * np.einsum("q,qt,qs->ts", W, Vw, gphys[:, :, k]),
                    rows_wk,
                    rows,
                )
                _scatter_pair(
                    trip["K_ss"],
                    -(1.0 / (eta * kappa)) * mass_w,
                    rows_wk,
                    rows_wk,
                )

    # boundary pass, grouped by owning cell
    groups: dict = {}
    for qi, key in enumerate(bquad.cells):
        groups.setdefault(key, []).append(qi)
    for (lev, cell), qidx in groups.items():
        qidx = np.array(qidx, int)
        pts = bquad.par_points[qidx]
        w = bquad.weights[qidx]
        nrm = bquad.normals[qidx]
        keys = _cell_keys(lev, cell, idx_v)
        keys_w = _cell_keys(lev, cell, idx_w)
        if not keys_w:
            raise FemError(f"no flux function covers boundary cell {cell}")
        V = np.stack(
            [
                evaluate_fast_batch(pts, float(mesh.h(m)), s, 0)
                for m, s in keys
            ],
            axis=1,
        )
        Vw = np.stack(
            [
                evaluate_fast_batch(pts, float(mesh.h(m)), s, 0)
                for m, s in keys_w
            ],
            axis=1,
        )
        rows = _rows_for(keys, idx_v)
        rows_w = _rows_for(keys_w, idx_w)
        alpha = problem.alpha(nrm @ a)
        gvals = g_field(bquad.phys_points[qidx])
        _scatter_pair(
            trip["G_uu"],
            0.5 * np.einsum("q,qt,qs->ts", w * alpha, V, V),
            rows,
            rows,
        )
        _scatter_vec(g_ug, 0.5 * (w * alpha * gvals) @ V, rows)
        for k in range(2):
            rows_wk = (rows_w[0] + k * msz, rows_w[1], rows_w[2])
            wk = w * nrm[:, k]
            _scatter_pair(
                trip["G_us"],
                -np.einsum("q,qt,qs->ts", wk, V, Vw),
                rows,
                rows_wk,
            )
            _scatter_pair(
                trip["G_su"],
                -np.einsum("q,qt,qs->ts", wk, Vw, V),
                rows_wk,
                rows,
            )
            _scatter_vec_block(g_sg, -(wk * gvals) @ Vw, rows_w, k * msz)

    shp_uu = (n, n)
    shp_us = (n, 2 * msz)
    shp_su = (2 * msz, n)
    shp_ss = (2 * msz, 2 * msz)
    return BlockSystem(
        n=n,
        m=msz,
        K_uu=trip["K_uu"].matrix(shp_uu),
        A_uu=trip["A_uu"].matrix(shp_uu),
        Kin_uu=trip["Kin_uu"].matrix(shp_uu),
        G_uu=trip["G_uu"].matrix(shp_uu),
        S1=trip["S1"].matrix(shp_uu),
        S2=trip["S2"].matrix(shp_uu),
        K_us=trip["K_us"].matrix(shp_us),
        G_us=trip["G_us"].matrix(shp_us),
        K_su=trip["K_su"].matrix(shp_su),
        G_su=trip["G_su"].matrix(shp_su),
        K_ss=trip["K_ss"].matrix(shp_ss),
        f_u=f_u,
        g_ug=g_ug,
        s_f=s_f,
        g_sg=g_sg,
    )


def _scatter_vec_block(vec, loc, rows, offset):
    rr, tt, cc = rows
    np.add.at(vec, rr + offset, cc * loc[tt])


# ---------------------------------------------------------------------------
# solvers


@dataclass
class SolveResult:
    U: np.ndarray
    Sigma: np.ndarray
    residual_u: float
    residual_sigma: float


def _residuals(system: BlockSystem, U, Sigma):
    r1 = system.lhs_uu @ U + system.B_us @ Sigma - system.rhs_u
    r2 = system.B_su @ U + system.K_ss @ Sigma - system.g_sg
    s1 = max(np.linalg.norm(system.rhs_u), 1.0)
    s2 = max(np.linalg.norm(system.g_sg), 1.0)
    return np.linalg.norm(r1) / s1, np.linalg.norm(r2) / s2


def schur_solve(system: BlockSystem) -> SolveResult:
    """Eliminate the flux, solve the reduced system, recover the flux."""
    try:
        lu_ss = spla.splu(system.K_ss.tocsc())
    except RuntimeError as exc:
        raise FemError(f"singular flux block K_ss: {exc}") from None
    B_su = system.B_su
    X = lu_ss.solve(np.asarray(B_su.todense()))
    reduced = system.lhs_uu - sps.csr_matrix(system.B_us @ X)
    y = lu_ss.solve(system.g_sg)
    rhs = system.rhs_u - system.B_us @ y
    try:
        lu = spla.splu(reduced.tocsc())
        U = lu.solve(rhs)
    except RuntimeError as exc:
        msg = f"singular reduced system: {exc}"
        if system.n <= 2000:
            _, _, vh = np.linalg.svd(np.asarray(reduced.todense()))
            raise FemError(msg + f"; near-null vector {vh[-1]}") from None
        raise FemError(msg) from None
    Sigma = lu_ss.solve(-(B_su @ U) + system.g_sg)
    ru, rs = _residuals(system, U, Sigma)
    return SolveResult(U=U, Sigma=Sigma, residual_u=ru, residual_sigma=rs)


def monolithic_solve(system: BlockSystem) -> SolveResult:
    """Direct factorization of the full block matrix (reference path)."""
    A, b = system.monolithic()
    try:
        x = spla.splu(A).solve(b)
    except RuntimeError as exc:
        raise FemError(f"singular block system: {exc}") from None
    U, Sigma = x[: system.n], x[system.n :]
    ru, rs = _residuals(system, U, Sigma)
    return SolveResult(U=U, Sigma=Sigma, residual_u=ru, residual_sigma=rs)


def solve_system(system: BlockSystem, method: str = "auto") -> SolveResult:
    if method == "schur":
        return schur_solve(system)
    if method == "monolithic":
        return monolithic_solve(system)
    if method == "auto":
        # the Schur path densifies K_ss^{-1} B_su; cap its size
        if system.n * 2 * system.m <= 4_000_000:
            return schur_solve(system)
        return monolithic_solve(system)
    raise ValueError(f"unknown solve method: {method}")


# ---------------------------------------------------------------------------
# fast solution evaluation


def translate_weights(basis: HierarchicalBasis, U) -> list[dict]:
    """Per-level dictionaries shift -> accumulated translate coefficient."""
    U = np.asarray(U, float)
    out: list[dict] = [dict() for _ in range(basis.nlevels)]
    for coef, f in zip(U, basis.functions):
        for m, shift, c in f.terms():
            out[m][shift] = out[m].get(shift, 0.0) + coef * c
    return out


def evaluate_solution(basis: HierarchicalBasis, U, points, order: int = 0):
    """Evaluate the spline with coefficients U at parametric points.

    Works translate-by-translate with vectorized per-support-cell batches,
    so it stays fast for large bases and many points.
    """
    weights = translate_weights(basis, U)
    pts = np.atleast_2d(np.asarray(points, float))
    npts = len(pts)
    vals = np.zeros(npts)
    grads = np.zeros((npts, 2)) if order >= 1 else None
    hess = np.zeros((npts, 2, 2)) if order >= 2 else None
    for m, wdict in enumerate(weights):
        if not wdict:
            continue
        h = float(basis.h0) / 2**m
        u = pts / h
        ii = np.floor(u[:, 0]).astype(int)
        jj = np.floor(u[:, 1]).astype(int)
        fx = u[:, 0] - ii
        fy = u[:, 1] - jj
        oo = np.where(fy < fx, LOWER, UPPER)
        frac = np.stack([fx, fy], axis=1)
        for du, dv, o in SUPPORT_CELLS:
            sel = np.nonzero(oo == o)[0]
            if not len(sel):
                continue
            si = ii[sel] - du
            sj = jj[sel] - dv
            w = np.array(
                [wdict.get((int(a), int(b)), 0.0) for a, b in zip(si, sj)]
            )
            nz = np.nonzero(w)[0]
            if not len(nz):
                continue
            take = sel[nz]
            local = frac[take] + (du, dv)
            res = evaluate_cellwise(local, 1.0, (0, 0), (du, dv, o), order)
            if order == 0:
                vals[take] += w[nz] * res
            else:
                vals[take] += w[nz] * res[0]
                grads[take] += (w[nz] / h)[:, None] * res[1]
                if order >= 2:
                    hess[take] += (w[nz] / h**2)[:, None, None] * res[2]
    if order == 0:
        return vals
    if order == 1:
        return vals, grads
    return vals, grads, hess


# ---------------------------------------------------------------------------
# solutions and error reporting


@dataclass
class Solution:
    """A solved discrete problem, evaluable at parametric points."""

    problem: ProblemSpec
    mesh: HierarchicalMesh
    basis: HierarchicalBasis
    strip: BoundaryStrip
    strip_basis: HierarchicalBasis
    gmap: GeometryMap
    U: np.ndarray
    Sigma: np.ndarray
    residual_u: float
    residual_sigma: float
    quad: VolumeQuadrature = field(repr=False, default=None)

    @property
    def dof(self) -> int:
        return len(self.basis)

    @property
    def strip_dof(self) -> int:
        return len(self.strip_basis)

    def evaluate(self, par_points, order: int = 0):
        return evaluate_solution(self.basis, self.U, par_points, order)


def solve_problem(
    problem: ProblemSpec,
    mesh: HierarchicalMesh,
    gmap: GeometryMap,
    method: str = "auto",
) -> Solution:
    """Build bases and strip per the problem spec, assemble, and solve."""
    from .hierarchy import basis_for
    from .strip import build_strip, strip_flux_basis

    basis = basis_for(mesh, problem.variant)
    strip = build_strip(mesh, problem.strip_kind)
    strip_basis = strip_flux_basis(strip, problem.variant)
    quad = volume_quadrature(mesh, gmap)
    system = assemble(problem, mesh, basis, strip, strip_basis, gmap, quad=quad)
    res = solve_system(system, method=method)
    return Solution(
        problem=problem,
        mesh=mesh,
        basis=basis,
        strip=strip,
        strip_basis=strip_basis,
        gmap=gmap,
        U=res.U,
        Sigma=res.Sigma,
        residual_u=res.residual_u,
        residual_sigma=res.residual_sigma,
        quad=quad,
    )


@dataclass
class ErrorReport:
    max_error: float
    par_points: np.ndarray
    phys_points: np.ndarray
    errors: np.ndarray


def _sample_points(solution: Solution, extra_levels: int = 2) -> np.ndarray:
    """Structured parametric grid two dyadic levels below the finest mesh."""
    mesh = solution.mesh
    fine = refine_cells(mesh.finest_cells(), extra_levels)
    verts: set = set()
    for c in fine:
        verts.update(cell_vertices(c))
    hs = float(mesh.h(mesh.nlevels - 1)) / 2**extra_levels
    grid = np.array(sorted(verts), float) * hs
    if solution.quad is not None:
        return np.vstack([grid, solution.quad.par_points])
    return grid


def error_report(
    solution: Solution, reference, extra_levels: int = 2
) -> ErrorReport:
    """Maximum |u - u_h| over a structured grid plus the quadrature points.

    `reference` is an analytic field of the physical coordinates or another
    Solution on the same parametric domain (e.g. a cached fine solve).
    """
    par = _sample_points(solution, extra_levels)
    with np.errstate(invalid="ignore", divide="ignore"):
        phys = solution.gmap.eval(par)
    # maps with removable corner singularities yield 0/0 at isolated
    # vertices of the sample grid; skip those points
    finite = np.isfinite(phys).all(axis=1)
    par, phys = par[finite], phys[finite]
    uh = solution.evaluate(par)
    if isinstance(reference, Solution):
        ref = reference.evaluate(par)
    elif callable(reference) or np.isscalar(reference):
        ref = _as_field(reference)(phys)
    else:
        raise FemError("reference must be a field or a Solution")
    err = np.abs(uh - ref)
    return ErrorReport(
        max_error=float(err.max()),
        par_points=par,
        phys_points=phys,
        errors=err,
    )

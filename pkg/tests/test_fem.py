import numpy as np
import pytest
import scipy.sparse as sps
import sympy as sp

from hibox.fem import (
    BlockSystem,
    FemError,
    ProblemSpec,
    assemble,
    error_report,
    evaluate_solution,
    monolithic_solve,
    schur_solve,
    solve_problem,
    solve_system,
    volume_quadrature,
)
from hibox.geometry import identity_map, quarter_circle_map
from hibox.hierarchy import (
    basis_for,
    build_mesh,
    evaluate_hierarchical,
    thbox_basis,
)
from hibox.lattice import cells_in_box, refine_cells
from hibox.strip import build_strip, strip_flux_basis

RNG = np.random.default_rng(7)


def unit_triangle_cells(n):
    upper = {(i, j, 1) for j in range(n) for i in range(j + 1)}
    lower = {(i, j, 0) for j in range(n) for i in range(j)}
    return upper | lower


def square_mesh(n=6, refines=(), h0=1):
    return build_mesh(set(cells_in_box(0, 0, n, n)), refines, h0=h0)


def two_level_mesh():
    return square_mesh(6, [refine_cells(set(cells_in_box(1, 1, 4, 4)))])


def poisson_setup(mesh, u, f, strip_kind="thbox", variant="thbox", gmap=None):
    gmap = gmap or identity_map()
    prob = ProblemSpec(
        source=f, dirichlet=u, strip_kind=strip_kind, variant=variant
    )
    return prob, gmap


# ---------------------------------------------------------------------------
# volume quadrature


def test_quadrature_area_unit_square():
    mesh = build_mesh(set(cells_in_box(0, 0, 4, 4)), [], h0=0.25)
    vq = volume_quadrature(mesh, identity_map())
    assert vq.total_weight == pytest.approx(1.0, abs=1e-13)


def test_quadrature_degree8_exact():
    # oracle: symbolic integration over the triangle 0 <= y <= x <= 1
    x, y = sp.symbols("x y")
    coeffs = RNG.normal(size=(9, 9))
    poly = sum(
        sp.Rational(str(round(coeffs[i, j], 6))) * x**i * y**j
        for i in range(9)
        for j in range(9)
        if i + j <= 8
    )
    exact = float(sp.integrate(sp.integrate(poly, (y, 0, x)), (x, 0, 1)))
    mesh = build_mesh({(0, 0, 0)}, [], h0=1)
    vq = volume_quadrature(mesh, identity_map())
    fn = sp.lambdify((x, y), poly, "numpy")
    approx = float(
        np.sum(vq.weights * fn(vq.par_points[:, 0], vq.par_points[:, 1]))
    )
    assert approx == pytest.approx(exact, abs=1e-12)


def test_quadrature_quarter_disk_area():
    # the map is merely continuous at the collapsed corner, so the rule
    # converges at reduced order there; a moderately fine mesh reaches 1e-8
    mesh = build_mesh(unit_triangle_cells(32), [], h0=1 / 32)
    vq = volume_quadrature(mesh, quarter_circle_map())
    assert vq.total_weight == pytest.approx(np.pi / 4, abs=1e-8)


# ---------------------------------------------------------------------------
# assembly structure


def _assembled(mesh, prob, gmap=None):
    gmap = gmap or identity_map()
    basis = basis_for(mesh, prob.variant)
    strip = build_strip(mesh, prob.strip_kind)
    sbasis = strip_flux_basis(strip, prob.variant)
    sys_ = assemble(prob, mesh, basis, strip, sbasis, gmap)
    return sys_, basis


def test_pure_diffusion_blocks():
    mesh = square_mesh()
    prob = ProblemSpec(kappa=1.0, source=1.0, dirichlet=0.0)
    sys_, _ = _assembled(mesh, prob)
    assert sys_.A_uu.nnz == 0
    assert sys_.S1.nnz == 0 and sys_.S2.nnz == 0
    assert np.linalg.norm(sys_.s_f) == 0
    sym = (sys_.K_uu - sys_.K_uu.T).toarray()
    assert np.max(np.abs(sym)) <= 1e-12
    # gradient of the partition of unity vanishes on the whole domain
    assert np.max(np.abs(sys_.K_uu @ np.ones(sys_.n))) <= 1e-12


def test_transpose_identities():
    mesh = two_level_mesh()
    prob = ProblemSpec(source=1.0, dirichlet=0.0)
    sys_, _ = _assembled(mesh, prob)
    assert np.max(np.abs((sys_.K_us - sys_.K_su.T).toarray())) <= 1e-12
    assert np.max(np.abs((sys_.G_us - sys_.G_su.T).toarray())) <= 1e-12
    assert np.max(np.abs((sys_.K_ss - sys_.K_ss.T).toarray())) <= 1e-12


def test_flux_mass_block_definite():
    mesh = square_mesh(4)
    prob = ProblemSpec(source=0.0, dirichlet=0.0)
    sys_, _ = _assembled(mesh, prob)
    eigs = np.linalg.eigvalsh(sys_.K_ss.toarray())
    # scaled vector mass matrix with a global minus sign
    assert np.max(eigs) < 0


def test_paper_literal_signs_flip_k_su_only():
    mesh = square_mesh(4)
    a, _ = _assembled(mesh, ProblemSpec(source=1.0, dirichlet=0.0))
    b, _ = _assembled(
        mesh, ProblemSpec(source=1.0, dirichlet=0.0, paper_literal_signs=True)
    )
    assert np.max(np.abs((a.K_su + b.K_su).toarray())) <= 1e-14
    assert np.max(np.abs((a.K_us - b.K_us).toarray())) <= 1e-14
    assert np.max(np.abs((a.G_su - b.G_su).toarray())) <= 1e-14


def test_export_coo_lines():
    mesh = square_mesh(4)
    sys_, _ = _assembled(mesh, ProblemSpec(source=1.0, dirichlet=0.0))
    lines = sys_.export_coo_lines("K_uu")
    assert len(lines) == sys_.K_uu.nnz
    r, c, v = lines[0].split()
    assert float(v) == sys_.K_uu[int(r), int(c)]


# ---------------------------------------------------------------------------
# patch test: polynomial solutions of total degree <= 3 are reproduced


def _cubic(p):
    x, y = p[:, 0], p[:, 1]
    return x**3 - 2 * y**3 + x**2 * y - x * y + 3 * x - y + 1


def _cubic_rhs(p):
    x, y = p[:, 0], p[:, 1]
    return -(6 * x - 12 * y + 2 * y)


@pytest.mark.parametrize("strip_kind", ["fixed", "hbox", "thbox"])
@pytest.mark.parametrize("mesh_name", ["uniform", "two_level"])
def test_patch_cubic(strip_kind, mesh_name):
    mesh = square_mesh() if mesh_name == "uniform" else two_level_mesh()
    prob = ProblemSpec(
        source=_cubic_rhs, dirichlet=_cubic, strip_kind=strip_kind
    )
    sol = solve_problem(prob, mesh, identity_map())
    rep = error_report(sol, _cubic)
    assert rep.max_error <= 1e-9
    assert sol.residual_u <= 1e-9 and sol.residual_sigma <= 1e-9


def test_patch_hbox_variant():
    prob = ProblemSpec(
        source=_cubic_rhs, dirichlet=_cubic, strip_kind="hbox", variant="hbox"
    )
    sol = solve_problem(prob, two_level_mesh(), identity_map())
    assert error_report(sol, _cubic).max_error <= 1e-9


# ---------------------------------------------------------------------------
# solvers


def _toy_system():
    def m(v, shape):
        return sps.csr_matrix(np.array(v, float).reshape(shape))

    z11 = m([0.0], (1, 1))
    z12 = m([0.0, 0.0], (1, 2))
    z21 = m([0.0, 0.0], (2, 1))
    return BlockSystem(
        n=1,
        m=1,
        K_uu=m([2.0], (1, 1)),
        A_uu=z11,
        Kin_uu=z11,
        G_uu=z11,
        S1=z11,
        S2=z11,
        K_us=m([1.0, 0.0], (1, 2)),
        G_us=z12,
        K_su=m([1.0, 0.0], (2, 1)),
        G_su=z21,
        K_ss=sps.csr_matrix(sps.diags([-1.0, -1.0])),
        f_u=np.array([3.0]),
        g_ug=np.zeros(1),
        s_f=np.zeros(1),
        g_sg=np.array([1.0, 0.0]),
    )


def test_schur_toy():
    # reduced matrix 3, reduced rhs 4, so U = 4/3 and Sigma = (1/3, 0)
    res = schur_solve(_toy_system())
    assert res.U == pytest.approx([4 / 3], abs=1e-14)
    assert res.Sigma == pytest.approx([1 / 3, 0.0], abs=1e-14)
    mono = monolithic_solve(_toy_system())
    assert mono.U == pytest.approx(res.U, abs=1e-14)


def test_schur_matches_monolithic():
    mesh = two_level_mesh()
    prob = ProblemSpec(
        kappa=0.5,
        advection=(1.0, 0.5),
        source=_cubic_rhs,
        dirichlet=_cubic,
        delta=0.01,
    )
    gmap = identity_map()
    basis = basis_for(mesh, prob.variant)
    strip = build_strip(mesh, prob.strip_kind)
    sbasis = strip_flux_basis(strip, prob.variant)
    sys_ = assemble(prob, mesh, basis, strip, sbasis, gmap)
    a = schur_solve(sys_)
    b = monolithic_solve(sys_)
    scale = np.max(np.abs(a.U))
    assert np.max(np.abs(a.U - b.U)) <= 1e-9 * scale
    assert np.max(np.abs(a.Sigma - b.Sigma)) <= 1e-9 * scale
    assert a.residual_u <= 1e-9 and a.residual_sigma <= 1e-9


def test_solve_system_dispatch():
    with pytest.raises(ValueError):
        solve_system(_toy_system(), method="magic")


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(kappa=0.0)
    with pytest.raises(ValueError):
        ProblemSpec(kappa=2.0)
    with pytest.raises(ValueError):
        ProblemSpec(delta=-1.0)
    p = ProblemSpec(kappa=0.5)
    assert p.eta == pytest.approx(4.0)
    assert p.alpha(np.array([-2.0, 0.5])) == pytest.approx([2.0, 0.0])


# ---------------------------------------------------------------------------
# solution evaluation and error report


def test_evaluate_solution_matches_hierarchical():
    mesh = two_level_mesh()
    basis = thbox_basis(mesh)
    U = RNG.normal(size=len(basis))
    pts = RNG.uniform(0.3, 5.7, size=(60, 2))
    for order in (0, 1, 2):
        fast = evaluate_solution(basis, U, pts, order)
        slow = evaluate_hierarchical(basis, U, pts, order)
        if order == 0:
            fast, slow = (fast,), (slow,)
        for f, s in zip(fast, slow):
            assert np.max(np.abs(f - s)) <= 1e-12 * max(1, np.max(np.abs(s)))


def test_error_report_self_is_zero():
    mesh = square_mesh(4)
    prob = ProblemSpec(source=1.0, dirichlet=0.0)
    sol = solve_problem(prob, mesh, identity_map())
    rep = error_report(sol, sol)
    assert rep.max_error == 0.0


def test_error_report_rejects_bad_reference():
    mesh = square_mesh(4)
    sol = solve_problem(ProblemSpec(source=1.0, dirichlet=0.0), mesh, identity_map())
    with pytest.raises(FemError):
        error_report(sol, object())

import numpy as np
import pytest
import scipy.linalg as sla

from hdg_interface import SchemeParams, build_mesh, condense, local_systems, recover, solve
from hdg_interface import solve_monolithic, solve_problem
from hdg_interface.assembly import ALTERNATIVE, PRIMARY, exact_dofs
from hdg_interface.errors import InvalidParam, NoConvergence, NotPositiveDefinite
from hdg_interface.solver import conjugate_gradient, full_residual

from conftest import mesh_for


def test_trace_system_size_n2():
    m, pb = mesh_for("example1", 2)
    cs = condense(local_systems(m, pb))
    assert cs.S.shape == (8, 8)
    assert cs.dim < cs.dofs.n_total


def test_schur_complement_matches_dense_oracle():
    m, pb = mesh_for("example1", 2)
    ls = local_systems(m, pb)
    from hdg_interface.assembly import scatter
    M = scatter(ls, with_loads=False).toarray()
    nu = ls.dofs.n_u
    S = M[nu:, nu:] - M[nu:, :nu] @ np.linalg.solve(M[:nu, :nu], M[:nu, nu:])
    assert np.allclose(condense(ls).S.toarray(), S, atol=1e-12)


def test_positive_definite_at_default_penalty():
    m, pb = mesh_for("example1", 4)
    S = condense(local_systems(m, pb)).S.toarray()
    sla.cholesky(S)
    x, info = solve(condense(local_systems(m, pb)))
    assert info["residual"] <= 1e-10


def test_zero_load_gives_zero():
    m, pb = mesh_for("example1", 4)
    cs = condense(local_systems(m, pb))
    cs.g[:] = 0.0
    for method in ("direct", "cg"):
        x, _ = solve(cs, method)
        assert np.all(x == 0)
    cs.local.b_u[:] = 0.0
    sol = recover(cs, np.zeros(cs.dim))
    assert np.all(sol.u == 0)


def test_cg_agrees_with_direct(kind):
    m, pb = mesh_for("example1", 8, kind)
    cs = condense(local_systems(m, pb))
    xd, _ = solve(cs, "direct")
    xc, info = solve(cs, "cg")
    assert info["iterations"] > 0 and info["residual"] <= 1e-12
    assert np.abs(xd - xc).max() <= 1e-9


def test_cg_on_spd_matrix():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((30, 30))
    S = B @ B.T + 30 * np.eye(30)
    g = rng.standard_normal(30)
    import scipy.sparse as sp
    x, its, res = conjugate_gradient(sp.csr_matrix(S), g)
    assert np.allclose(x, np.linalg.solve(S, g))
    assert its <= 30
    with pytest.raises(NoConvergence):
        conjugate_gradient(sp.csr_matrix(S), g, tol=1e-14, maxiter=2)


@pytest.mark.parametrize("name", ["example1", "example2", "patch"])
@pytest.mark.parametrize("n", [4, 8])
@pytest.mark.parametrize("variant", [PRIMARY, ALTERNATIVE])
def test_condensed_equals_monolithic(name, n, variant, kind):
    m, pb = mesh_for(name, n, kind)
    ls = local_systems(m, pb, SchemeParams(variant))
    cs = condense(ls)
    sol = recover(cs, solve(cs)[0])
    ref = solve_monolithic(ls)
    scale = max(np.abs(ref.u).max(), np.abs(ref.uhat).max())
    assert np.abs(sol.u - ref.u).max() <= 1e-9 * scale
    assert np.abs(sol.uhat - ref.uhat).max() <= 1e-9 * scale
    assert full_residual(ls, sol) < 1e-10


@pytest.mark.parametrize("variant", [PRIMARY, ALTERNATIVE])
def test_patch_solution_is_interpolant(variant, kind):
    m, pb = mesh_for("patch", 4, kind)
    sol = solve_problem(m, pb, SchemeParams(variant))
    x = exact_dofs(m, pb, variant)
    ls = local_systems(m, pb, SchemeParams(variant))
    assert np.abs(sol.to_vector(ls.dofs) - x).max() < 1e-10


def test_small_penalty_rejected():
    m, pb = mesh_for("example1", 4)
    with pytest.raises(NotPositiveDefinite):
        solve_problem(m, pb, SchemeParams(eta=1e-6))
    with pytest.raises(NotPositiveDefinite):
        solve_problem(m, pb, SchemeParams(eta=1e-6), method="cg")


def test_unknown_method():
    m, pb = mesh_for("example1", 2)
    with pytest.raises(InvalidParam):
        solve(condense(local_systems(m, pb)), "gmres")


def test_variants_differ_only_by_projected_jump(kind):
    # shifting the interface trace by the P1 projection of g_D / 2 maps one scheme onto the other
    m, pb = mesh_for("example1", 8, kind)
    a = solve_problem(m, pb, SchemeParams(PRIMARY))
    b = solve_problem(m, pb, SchemeParams(ALTERNATIVE))
    assert np.abs(a.u - b.u).max() < 1e-10
    from hdg_interface.mesh import INTERFACE, INTERIOR
    iface = m.edges_of_class(INTERFACE)
    x = m.vertices[m.edge_vertices[iface]][..., 0]          # (ne, 2) endpoint abscissae
    # exact L2 projection of 2 sin(pi x) / 2 onto P1 on [x0, x1], via the mass matrix
    from hdg_interface import fem
    rule = fem.quad_rule("edge", 9)
    s = (rule.points + 1) / 2
    phi = np.column_stack([1 - s, s])
    xs = x[:, :1] + s * (x[:, 1:] - x[:, :1])
    rhs = np.einsum("q,eq,qm->em", rule.weights / 2, np.sin(np.pi * xs), phi)
    proj = np.linalg.solve(np.array([[2.0, 1.0], [1.0, 2.0]]) / 6, rhs.T).T
    assert np.allclose(a.uhat[iface] - b.uhat[iface], proj, atol=1e-10)
    inner = m.edges_of_class(INTERIOR)
    assert np.abs(a.uhat[inner] - b.uhat[inner]).max() < 1e-10

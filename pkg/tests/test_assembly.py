import numpy as np
import pytest

from hdg_interface import SchemeParams, assemble, build_mesh, local_systems, preset
from hdg_interface.assembly import (ALTERNATIVE, PRIMARY, dof_map, exact_dofs, local_matrices,
                                    sigma_factor)
from hdg_interface.errors import InvalidParam, NotInterfaceEdge
from hdg_interface.mesh import INTERFACE, INTERIOR
from hdg_interface.problem import CoefficientField

from conftest import mesh_for


def test_p1_stiffness_on_unit_right_triangle():
    # 2D P1 stiffness is scale invariant, so the lower triangle (0,0),(h,0),(h,h)
    # reproduces the unit right-triangle matrix once its right-angle vertex is first
    m = build_mesh("example1", 2, "triangle")
    coef = CoefficientField.piecewise_scalar({1: 1.0, 2: 1.0})
    Auu, _, _ = local_matrices(m, coef, np.zeros(m.n_edges), consistency=False)
    ref = np.array([[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]])
    perm = [1, 0, 2]
    assert np.allclose(Auu[0][np.ix_(perm, perm)], ref)


def test_dof_counts(kind):
    m = build_mesh("example1", 4, kind)
    d = dof_map(m)
    assert d.n_u == m.n_elements * m.nloc
    assert d.n_trace == 2 * np.isin(m.edge_class, [INTERIOR, INTERFACE]).sum()


@pytest.mark.parametrize("name,n", [("example1", 4), ("example2", 4), ("patch", 2), ("example1", 8)])
def test_symmetry_and_sparsity(name, n, kind):
    m, pb = mesh_for(name, n, kind)
    M, _ = assemble(m, pb)
    M = M.tocoo()
    asym = abs(M - M.T).max()
    assert asym <= 1e-12 * abs(M).max()
    d = dof_map(m)
    both_u = (M.row < d.n_u) & (M.col < d.n_u) & (M.data != 0)
    assert np.all(M.row[both_u] // d.nloc == M.col[both_u] // d.nloc)


def test_sigma_factor():
    m = build_mesh("example1", 4)
    e = m.edges_of_class(INTERFACE)[0]
    k1, k2 = m.edge_elements[e]
    assert sigma_factor(PRIMARY, m, k1, e) == 1
    assert sigma_factor(PRIMARY, m, k2, e) == -1
    assert sigma_factor(ALTERNATIVE, m, k1, e) == 1
    assert sigma_factor(ALTERNATIVE, m, k2, e) == 0
    with pytest.raises(NotInterfaceEdge):
        sigma_factor(PRIMARY, m, k1, m.edges_of_class(INTERIOR)[0])


def test_variants_identical_without_jump(kind):
    geom, pb = preset("example1")
    pb0 = pb.__class__(**{**pb.__dict__, "g_D": lambda p: np.zeros(p.shape[:-1])})
    m = build_mesh(geom, 4, kind)
    M1, b1 = assemble(m, pb0, SchemeParams(PRIMARY))
    M2, b2 = assemble(m, pb0, SchemeParams(ALTERNATIVE))
    assert abs(M1 - M2).max() == 0.0
    assert np.array_equal(b1, b2)


def test_gd_loads_vanish_without_jump():
    geom, pb = preset("example1")
    zero = lambda p: np.zeros(p.shape[:-1])
    m = build_mesh(geom, 4)
    pb0 = pb.__class__(**{**pb.__dict__, "g_D": zero, "g_N": zero,
                          "f": {1: zero, 2: zero}})
    _, b = assemble(m, pb0)
    assert np.all(b == 0)


@pytest.mark.parametrize("variant", [PRIMARY, ALTERNATIVE])
@pytest.mark.parametrize("n", [2, 4])
def test_patch_consistency(variant, n, kind):
    m, pb = mesh_for("patch", n, kind)
    M, b = assemble(m, pb, SchemeParams(variant))
    x = exact_dofs(m, pb, variant)
    assert np.abs(M @ x - b).max() <= 1e-10 * np.abs(b).max()
    # element by element as well
    ls = local_systems(m, pb, SchemeParams(variant))
    d = ls.dofs
    for k in range(m.n_elements):
        loc = ls[k]
        xu = x[d.element_u[k]]
        xt = np.where(loc.trace_ids >= 0, x[np.maximum(loc.trace_ids, 0)], 0.0)
        r = loc.A_uu @ xu + loc.A_ut @ xt - loc.b_u
        assert np.abs(r).max() < 1e-12


def test_default_penalty_and_bad_eta(ex1):
    geom, pb = ex1
    m = build_mesh(geom, 2)
    assert SchemeParams().eta_bounds(m, pb) == (40.0, 40.0)
    with pytest.raises(InvalidParam):
        SchemeParams(eta=-1.0).penalties(m, pb)
    with pytest.raises(InvalidParam):
        SchemeParams(variant="other")

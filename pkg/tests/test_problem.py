import numpy as np
import pytest

from hdg_interface import eval_problem, preset
from hdg_interface.errors import MissingExact, UnknownPreset


def laplacian(u, p, h=1e-4):
    e0, e1 = np.array([h, 0.0]), np.array([0.0, h])
    return (u(p + e0) + u(p - e0) + u(p + e1) + u(p - e1) - 4 * u(p)) / h**2


def test_example1_pde_residual(ex1):
    _, pb = ex1
    rng = np.random.default_rng(0)
    for tag, lam, lo, hi in ((1, 4.0, 0.05, 0.45), (2, 1.0, 0.55, 0.95)):
        p = np.column_stack([rng.uniform(0.05, 0.95, 20), rng.uniform(lo, hi, 20)])
        f = eval_problem(pb, "f", p, tag)
        assert np.allclose(-lam * laplacian(pb.exact_u[tag], p), f, rtol=1e-5, atol=1e-4)


def test_example1_jumps(ex1):
    _, pb = ex1
    x = np.linspace(0, 1, 11)
    p = np.column_stack([x, np.full_like(x, 0.5)])
    jump = eval_problem(pb, "exact_u", p, 1) - eval_problem(pb, "exact_u", p, 2)
    assert np.allclose(eval_problem(pb, "gD", p), jump)
    assert np.allclose(eval_problem(pb, "gD", p), 2 * np.sin(np.pi * x))
    # conormal derivatives vanish on y = 1/2, so the flux jump is zero
    assert np.allclose(eval_problem(pb, "gN", p), 0.0, atol=1e-12)


def test_example1_boundary_vanishes(ex1):
    _, pb = ex1
    t = np.linspace(0, 1, 7)
    p = np.column_stack([t, np.zeros_like(t)])
    assert np.allclose(pb.exact_u[1](p), 0.0)


def test_coefficient_bounds(ex1):
    _, pb = ex1
    assert (pb.A.lambda_min, pb.A.lambda_max) == (1.0, 4.0)
    assert np.allclose(eval_problem(pb, "A", np.array([[0.2, 0.2]]), 1), 4 * np.eye(2))


def test_example2_data(ex2):
    geom, pb = ex2
    assert not pb.has_exact
    assert 0.5 < pb.s < 1.0
    assert eval_problem(pb, "gD", np.array([[0.5, 0.6]])) == pytest.approx(2.0)
    assert eval_problem(pb, "gD", np.array([[0.25, 0.5]])) == pytest.approx(2 * np.sin(np.pi / 4))
    with pytest.raises(MissingExact):
        eval_problem(pb, "exact_u", np.array([[0.1, 0.1]]))


def test_patch_data(patch):
    _, pb = patch
    p = np.array([[0.3, 0.5]])
    assert eval_problem(pb, "exact_u", p, 1) - eval_problem(pb, "exact_u", p, 2) == pytest.approx(-1.0)
    assert eval_problem(pb, "gD", p) == pytest.approx(-1.0)
    assert eval_problem(pb, "gN", p) == pytest.approx(0.0)


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset("example3")


def test_example1_point_values(ex1):
    _, pb = ex1
    p = np.array([[0.5, 0.25]])
    assert eval_problem(pb, "exact_u", p, 1)[0] == pytest.approx(np.sqrt(2) / 2)
    assert eval_problem(pb, "f", p, 1)[0] == pytest.approx(8 * np.pi**2 * np.sqrt(2) / 2)


def test_example1_analytic_residual(ex1):
    # -div(lam grad(+-sin sin)) = +-2 pi^2 lam sin sin, differentiated by hand
    _, pb = ex1
    rng = np.random.default_rng(7)
    p = rng.uniform(0, 1, (50, 2))
    ss = np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
    for tag, lam, sign in ((1, 4.0, 1.0), (2, 1.0, -1.0)):
        assert np.allclose(eval_problem(pb, "f", p, tag), sign * 2 * np.pi**2 * lam * ss, atol=1e-10)


def test_jump_data_matches_exact_solution(ex1):
    _, pb = ex1
    x = np.random.default_rng(11).uniform(0, 1, 20)
    p = np.column_stack([x, np.full(20, 0.5)])
    jump = pb.exact_u[1](p) - pb.exact_u[2](p)
    n1 = np.array([0.0, 1.0])
    flux = 4 * pb.exact_grad[1](p) @ n1 - 1 * pb.exact_grad[2](p) @ n1
    assert np.abs(eval_problem(pb, "gD", p) - jump).max() <= 1e-12
    assert np.abs(eval_problem(pb, "gN", p) - flux).max() <= 1e-12

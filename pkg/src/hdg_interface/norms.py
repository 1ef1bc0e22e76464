"""Error measures, discrete HDG norms and convergence-rate tables."""
from dataclasses import dataclass, field
import io
import math

import numpy as np

from . import fem
from .assembly import (DATA_DEGREE, edge_quadrature, element_quadrature, eliminate_boundary,
                       local_matrices, scatter)
from .errors import BadSequence, InvalidParam, MissingExact, NotNested


def _identity(p, tag):
    return np.broadcast_to(np.eye(2), p.shape[:-1] + (2, 2))


def _errors(sol, mesh, problem=None, reference=None):
    """Squared L2 and broken-H1 errors, summed over elements."""
    if reference is not None:
        ref_sol, ref_mesh = reference
        if not ref_mesh.refines(mesh):
            raise NotNested(f"{ref_mesh.name} does not refine {mesh.name}")
        mp, wdet = element_quadrature(ref_mesh, DATA_DEGREE)
        u_ref = np.einsum("eqi,ei->eq", mp.values, ref_sol.u)
        g_ref = np.einsum("eqia,ei->eqa", mp.grads, ref_sol.u)
        centroids = ref_mesh.element_coords().mean(axis=1)
        parent = mesh.locate(centroids)
        pc = mesh.element_coords(parent)
        refpts = fem.inverse_map(mesh.kind, pc, mp.x)
        cp = fem.map_points(mesh.kind, pc, refpts)
        u_h = np.einsum("eqi,ei->eq", cp.values, sol.u[parent])
        g_h = np.einsum("eqia,ei->eqa", cp.grads, sol.u[parent])
    else:
        if problem is None or not problem.has_exact:
            raise MissingExact("an exact solution or a reference solution is required")
        mp, wdet = element_quadrature(mesh, DATA_DEGREE)
        u_ref = np.empty(mp.x.shape[:2])
        g_ref = np.empty(mp.x.shape)
        for tag in (1, 2):
            sel = mesh.tags == tag
            if sel.any():
                u_ref[sel] = problem.exact_u[tag](mp.x[sel])
                g_ref[sel] = problem.exact_grad[tag](mp.x[sel])
        u_h = np.einsum("eqi,ei->eq", mp.values, sol.u)
        g_h = np.einsum("eqia,ei->eqa", mp.grads, sol.u)
    l2 = np.sum(wdet * (u_ref - u_h) ** 2)
    h1 = np.sum(wdet * np.sum((g_ref - g_h) ** 2, axis=-1))
    return l2, h1


def l2_error(sol, mesh, problem=None, reference=None):
    """e_h = ||u - u_h||_{L2}; ``reference`` is a ``(solution, finer mesh)`` pair."""
    return math.sqrt(_errors(sol, mesh, problem, reference)[0])


def h1_broken_error(sol, mesh, problem=None, reference=None):
    """E_h = |u - u_h|_{H1(T_h)}, the element-wise gradient error."""
    return math.sqrt(_errors(sol, mesh, problem, reference)[1])


def errors(sol, mesh, problem=None, reference=None):
    l2, h1 = _errors(sol, mesh, problem, reference)
    return math.sqrt(h1), math.sqrt(l2)


def _h2_blocks(mesh):
    # |v|_{H2(K)}^2 = sum over multi-indices |a| = 2 of ||D^a v||^2 (mixed term once)
    H = fem.hessians_axis_aligned(mesh.kind, mesh.element_coords())
    area = mesh.areas()
    fro = (np.einsum("ei,ej->eij", H[..., 0], H[..., 0])
           + np.einsum("ei,ej->eij", H[..., 1], H[..., 1])
           + np.einsum("ei,ej->eij", H[..., 2], H[..., 2]))
    return (mesh.diameters() ** 2 * area)[:, None, None] * fro


def hdg_norm(v, vhat, mesh, eta, which="1h"):
    """Discrete HDG norm of the pair ``(v, vhat)``.

    ``v`` holds element coefficients (E, nloc), ``vhat`` edge traces (ned, 2)
    and ``eta`` the per-edge penalties.  ``which`` is ``"1h"`` or ``"2h"``.
    """
    if which not in ("1h", "2h"):
        raise InvalidParam(f"unknown norm {which!r}")
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (mesh.n_edges,))
    tau = eta / mesh.edge_length
    mp, wdet = element_quadrature(mesh, 3)
    grad = np.einsum("eqia,ei->eqa", mp.grads, v)
    total = np.sum(wdet * np.sum(grad**2, axis=-1))
    for l in range(mesh.nloc):
        eq = edge_quadrature(mesh, l)
        vh = np.einsum("qm,em->eq", eq.phi, vhat[eq.edge])
        vi = np.einsum("eqi,ei->eq", eq.N, v)
        total += np.sum(tau[eq.edge][:, None] * eq.w * (vh - vi) ** 2)
    if which == "2h":
        total += np.einsum("ei,eij,ej->", v, _h2_blocks(mesh), v)
    return math.sqrt(total)


def gram_matrix(mesh, eta, which="1h"):
    """Sparse Gram matrix of an HDG norm on V_h (boundary traces fixed at zero)."""
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (mesh.n_edges,))
    Auu, Aut, Att = local_matrices(mesh, _identity, eta / mesh.edge_length, consistency=False)
    if which == "2h":
        Auu = Auu + _h2_blocks(mesh)
    elif which != "1h":
        raise InvalidParam(f"unknown norm {which!r}")
    return scatter(eliminate_boundary(mesh, Auu, Aut, Att), with_loads=False)


@dataclass
class ConvergenceRecord:
    h: list
    E: list
    e: list
    R: list = field(default_factory=list)
    r: list = field(default_factory=list)

    HEADER = "h,E_h,R_h,e_h,r_h"

    def rows(self):
        for i, (h, E, e) in enumerate(zip(self.h, self.E, self.e)):
            yield h, E, (self.R[i - 1] if i else None), e, (self.r[i - 1] if i else None)

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write(self.HEADER + "\n")
        fmt = lambda v: "" if v is None else f"{v:.6g}"
        for row in self.rows():
            buf.write(",".join(fmt(v) for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def table(self):
        lines = [f"{'h':>10} {'E_h':>11} {'R_h':>6} {'e_h':>11} {'r_h':>6}"]
        for h, E, R, e, r in self.rows():
            rs = lambda v: f"{v:6.2f}" if v is not None else " " * 6
            lines.append(f"{h:10.5f} {E:11.3e} {rs(R)} {e:11.3e} {rs(r)}")
        return "\n".join(lines)


def rate(a, b):
    return (math.log(a) - math.log(b)) / math.log(2)


def rates(rows, rtol=1e-9):
    """Build a :class:`ConvergenceRecord` from ``(h, E_h, e_h)`` rows with halving h."""
    rows = list(rows)
    if len(rows) < 1:
        raise BadSequence("empty sequence")
    hs, Es, es = (list(map(float, c)) for c in zip(*rows))
    for a, b in zip(hs, hs[1:]):
        if abs(a / b - 2.0) > rtol * 2:
            raise BadSequence(f"h must halve between rows: {a} -> {b}")
    R = [rate(a, b) for a, b in zip(Es, Es[1:])]
    r = [rate(a, b) for a, b in zip(es, es[1:])]
    return ConvergenceRecord(hs, Es, es, R, r)

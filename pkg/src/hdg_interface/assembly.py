"""Element-local and global HDG systems for the interface problem.

Unknowns are the element polynomials ``u_h`` (nodal P1/Q1 coefficients) and a
single-valued linear trace ``uhat_h`` on every non-boundary edge, stored by
its values at the edge's two endpoints in global orientation (lower vertex id
first).  Global numbering puts all element DOFs first (``k * nloc + i``),
followed by the trace DOFs (``n_u + 2 * t + m`` for the ``t``-th
non-boundary edge).

Local blocks are computed for all elements at once; local trace columns are
ordered by local edge, two per edge.
"""
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from . import fem
from .errors import InvalidParam, MissingExact, NotInterfaceEdge
from .mesh import BOUNDARY, INTERFACE
from .problem import dirichlet_trace

PRIMARY = "primary"
ALTERNATIVE = "alternative"
VARIANTS = (PRIMARY, ALTERNATIVE)

MATRIX_DEGREE = 3
DATA_DEGREE = 9


@dataclass(frozen=True)
class SchemeParams:
    variant: str = PRIMARY
    eta: Union[None, float, np.ndarray] = None   # None -> 10 * lambda_max
    k: int = 1
    l: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParam(f"unknown scheme variant {self.variant!r}")
        if (self.k, self.l) != (1, 1):
            raise InvalidParam("only k = l = 1 is supported")

    def penalties(self, mesh, problem):
        """Per-edge penalty eta_e."""
        if self.eta is None:
            eta = np.full(mesh.n_edges, 10.0 * problem.A.lambda_max)
        else:
            eta = np.broadcast_to(np.asarray(self.eta, dtype=float), (mesh.n_edges,)).copy()
        if not np.all(eta > 0) or not np.all(np.isfinite(eta)):
            raise InvalidParam("penalty parameters must be positive and finite")
        return eta

    def eta_bounds(self, mesh, problem):
        eta = self.penalties(mesh, problem)
        return float(eta.min()), float(eta.max())


@dataclass(frozen=True)
class DofMap:
    nloc: int
    n_u: int
    n_trace: int
    edge_trace: np.ndarray      # (ned,) index among trace-carrying edges, -1 on the boundary
    element_trace: np.ndarray   # (E, 2 nloc) global trace DOF index (offset by n_u), -1 on the boundary

    @property
    def n_total(self):
        return self.n_u + self.n_trace

    @property
    def element_u(self):
        return np.arange(self.n_u).reshape(-1, self.nloc)

    def trace_dofs(self, edge):
        t = self.edge_trace[edge]
        return None if t < 0 else (self.n_u + 2 * t, self.n_u + 2 * t + 1)


def dof_map(mesh):
    nloc = mesh.nloc
    carries = mesh.edge_class != BOUNDARY
    edge_trace = np.full(mesh.n_edges, -1, dtype=int)
    edge_trace[carries] = np.arange(carries.sum())
    n_u = mesh.n_elements * nloc
    t = edge_trace[mesh.element_edges]                        # (E, nloc)
    ids = np.stack([2 * t, 2 * t + 1], axis=-1) + n_u         # (E, nloc, 2)
    ids[t < 0] = -1
    return DofMap(nloc, n_u, 2 * int(carries.sum()), edge_trace, ids.reshape(len(t), 2 * nloc))


def sigma_factor(variant, mesh, element, edge):
    """L3 sign factor of ``element`` on interface ``edge``."""
    if mesh.edge_class[edge] != INTERFACE:
        raise NotInterfaceEdge(f"edge {edge} is not an interface edge")
    if element not in mesh.edge_elements[edge]:
        raise InvalidParam(f"element {element} is not adjacent to edge {edge}")
    return _sigma(variant, mesh.tags[element])


def _sigma(variant, tags):
    tags = np.asarray(tags)
    if variant == PRIMARY:
        return np.where(tags == 1, 1.0, -1.0)
    if variant == ALTERNATIVE:
        return np.where(tags == 1, 1.0, 0.0)
    raise InvalidParam(f"unknown scheme variant {variant!r}")


def _interface_weights(variant, tags):
    """(L3 coefficient, weight of this side's conormal trace in L2)."""
    sig = _sigma(variant, tags)
    if variant == PRIMARY:
        return sig / 2, np.full(np.shape(sig), 0.5)
    return sig, sig


@dataclass
class EdgeQuadrature:
    """Quadrature data on local edge ``l`` of every element."""
    x: np.ndarray        # (E, q, 2)
    w: np.ndarray        # (E, q) physical weights
    N: np.ndarray        # (E, q, nloc)
    G: np.ndarray        # (E, q, nloc, 2)
    normal: np.ndarray   # (E, 2) outward
    phi: np.ndarray      # (q, 2) trace basis in global edge orientation
    edge: np.ndarray     # (E,) global edge ids


def edge_quadrature(mesh, l, degree=DATA_DEGREE):
    rule = fem.quad_rule("edge", degree)
    s = (rule.points + 1) / 2
    phi = np.column_stack([1 - s, s])
    nloc = mesh.nloc
    ref = fem.REFERENCE_VERTICES[mesh.kind]
    ra, rb = ref[l], ref[(l + 1) % nloc]
    fwd = ra + s[:, None] * (rb - ra)
    bwd = rb + s[:, None] * (ra - rb)
    flip = mesh.element_edge_flip[:, l]
    refpts = np.where(flip[:, None, None], bwd[None], fwd[None])
    coords = mesh.element_coords()
    mp = fem.map_points(mesh.kind, coords, refpts)
    edge = mesh.element_edges[:, l]
    he = mesh.edge_length[edge]
    w = rule.weights[None, :] * (he / 2)[:, None]
    normal = mesh.edge_normal[edge] * mesh.element_edge_sign[:, l][:, None]
    return EdgeQuadrature(mp.x, w, mp.values, mp.grads, normal, phi, edge)


def element_quadrature(mesh, degree):
    rule = fem.quad_rule(mesh.kind, degree)
    mp = fem.map_points(mesh.kind, mesh.element_coords(), rule.points)
    return mp, mp.detJ * rule.weights[None, :]


def eval_by_tag(mesh, func_by_tag, x, shape_tail=()):
    """Evaluate per-subdomain callables at per-element points ``x`` (E, q, 2)."""
    out = np.empty(x.shape[:2] + shape_tail)
    for tag in (1, 2):
        sel = mesh.tags == tag
        if sel.any():
            out[sel] = func_by_tag(x[sel], tag)
    return out


def local_matrices(mesh, coef, tau, consistency=True):
    """Element blocks of B_h with coefficient ``coef(points, tag)`` and edge weights ``tau``.

    With ``consistency=False`` the conormal terms B2, B3 are dropped, which
    gives the Gram matrix of the ``||.||_{1,h}`` norm when ``coef`` is the
    identity.
    """
    E, nloc = mesh.n_elements, mesh.nloc
    mp, wdet = element_quadrature(mesh, MATRIX_DEGREE)
    Aq = eval_by_tag(mesh, coef, mp.x, (2, 2))
    AG = np.einsum("eqab,eqjb->eqja", Aq, mp.grads)
    Auu = np.einsum("eq,eqia,eqja->eij", wdet, mp.grads, AG)
    Aut = np.zeros((E, nloc, 2 * nloc))
    Att = np.zeros((E, 2 * nloc, 2 * nloc))
    for l in range(nloc):
        eq = edge_quadrature(mesh, l)
        t = tau[eq.edge][:, None] * eq.w
        cols = slice(2 * l, 2 * l + 2)
        Auu += np.einsum("eq,eqi,eqj->eij", t, eq.N, eq.N)
        Aut[:, :, cols] -= np.einsum("eq,eqi,qm->eim", t, eq.N, eq.phi)
        Att[:, cols, cols] += np.einsum("eq,qm,qp->emp", t, eq.phi, eq.phi)
        if consistency:
            Ae = eval_by_tag(mesh, coef, eq.x, (2, 2))
            Gn = np.einsum("eqab,eqjb,ea->eqj", Ae, eq.G, eq.normal)
            cross = np.einsum("eq,eqj,eqi->eij", eq.w, Gn, eq.N)
            Auu -= cross + cross.transpose(0, 2, 1)
            Aut[:, :, cols] += np.einsum("eq,eqi,qm->eim", eq.w, Gn, eq.phi)
    return Auu, Aut, Att


@dataclass
class LocalSystem:
    """One element's block system [[A_uu, A_ut], [A_tu, A_tt]] with loads."""
    element: int
    A_uu: np.ndarray
    A_ut: np.ndarray
    A_tt: np.ndarray
    b_u: np.ndarray
    b_t: np.ndarray
    trace_ids: np.ndarray

    @property
    def A_tu(self):
        return self.A_ut.T

    def matrix(self):
        return np.block([[self.A_uu, self.A_ut], [self.A_ut.T, self.A_tt]])


@dataclass
class LocalSystems:
    """Batched local systems; boundary trace columns are already eliminated (zeroed)."""
    A_uu: np.ndarray   # (E, nloc, nloc)
    A_ut: np.ndarray   # (E, nloc, 2 nloc)
    A_tt: np.ndarray   # (E, 2 nloc, 2 nloc)
    b_u: np.ndarray    # (E, nloc)
    b_t: np.ndarray    # (E, 2 nloc)
    dofs: DofMap
    boundary_trace: np.ndarray  # (ned, 2) prescribed trace on boundary edges, 0 elsewhere

    def __getitem__(self, k):
        return LocalSystem(int(k), self.A_uu[k], self.A_ut[k], self.A_tt[k], self.b_u[k],
                           self.b_t[k], self.dofs.element_trace[k])


def boundary_trace(mesh, problem):
    """L2 projection onto P1(e) of the Dirichlet data on each boundary edge."""
    out = np.zeros((mesh.n_edges, 2))
    if problem.boundary is None:
        return out
    bnd = mesh.edges_of_class(BOUNDARY)
    rule = fem.quad_rule("edge", DATA_DEGREE)
    s = (rule.points + 1) / 2
    phi = np.column_stack([1 - s, s])
    p0 = mesh.vertices[mesh.edge_vertices[bnd, 0]]
    p1 = mesh.vertices[mesh.edge_vertices[bnd, 1]]
    x = p0[:, None, :] + s[None, :, None] * (p1 - p0)[:, None, :]
    tags = mesh.tags[mesh.edge_elements[bnd, 0]]
    g = np.empty(x.shape[:2])
    for tag in (1, 2):
        sel = tags == tag
        if sel.any():
            g[sel] = dirichlet_trace(problem, x[sel], tag)
    # the edge length cancels between mass matrix and load
    rhs = np.einsum("q,eq,qm->em", rule.weights / 2, g, phi)
    mass = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6
    out[bnd] = np.linalg.solve(mass, rhs.T).T
    return out


def _local_loads(mesh, problem, params, eta):
    E, nloc = mesh.n_elements, mesh.nloc
    mp, wdet = element_quadrature(mesh, DATA_DEGREE)
    fq = eval_by_tag(mesh, lambda p, t: problem.f[t](p), mp.x)
    b_u = np.einsum("eq,eq,eqi->ei", wdet, fq, mp.values)
    b_t = np.zeros((E, 2 * nloc))
    coef, weight = _interface_weights(params.variant, mesh.tags)
    tau = eta / mesh.edge_length
    for l in range(nloc):
        edges = mesh.element_edges[:, l]
        on = mesh.edge_class[edges] == INTERFACE
        if not on.any():
            continue
        eq = edge_quadrature(mesh, l)
        ks = np.flatnonzero(on)
        x, w, N, phi = eq.x[ks], eq.w[ks], eq.N[ks], eq.phi
        gD = problem.g_D(x)
        gN = problem.g_N(x)
        n1 = eq.normal[ks] * np.where(mesh.tags[ks] == 1, 1.0, -1.0)[:, None]
        Ae = np.empty(x.shape[:2] + (2, 2))
        for tag in (1, 2):
            sel = mesh.tags[ks] == tag
            if sel.any():
                Ae[sel] = problem.A(x[sel], tag)
        conormal = np.einsum("eqab,eqjb,ea->eqj", Ae, eq.G[ks], n1)
        t = tau[edges[ks]][:, None]
        c = coef[ks][:, None]
        cols = slice(2 * l, 2 * l + 2)
        b_u[ks] += -weight[ks][:, None] * np.einsum("eq,eq,eqi->ei", w, gD, conormal)
        b_u[ks] += c * t * np.einsum("eq,eq,eqi->ei", w, gD, N)
        b_t[ks, cols] += 0.5 * np.einsum("eq,eq,qm->em", w, gN, phi)
        b_t[ks, cols] -= c * t * np.einsum("eq,eq,qm->em", w, gD, phi)
    return b_u, b_t


def eliminate_boundary(mesh, Auu, Aut, Att, b_u=None, b_t=None, ub=None):
    """Move prescribed boundary traces ``ub`` to the load and drop their columns."""
    E, nloc = Auu.shape[:2]
    dofs = dof_map(mesh)
    b_u = np.zeros((E, nloc)) if b_u is None else b_u
    b_t = np.zeros((E, 2 * nloc)) if b_t is None else b_t
    ub = np.zeros((mesh.n_edges, 2)) if ub is None else ub
    bnd_cols = dofs.element_trace < 0                     # (E, 2 nloc)
    ub_local = np.where(bnd_cols, ub[mesh.element_edges].reshape(E, -1), 0.0)
    b_u = b_u - np.einsum("eij,ej->ei", Aut, ub_local)
    Aut = np.where(bnd_cols[:, None, :], 0.0, Aut)
    Att = np.where(bnd_cols[:, :, None] | bnd_cols[:, None, :], 0.0, Att)
    b_t = np.where(bnd_cols, 0.0, b_t)
    return LocalSystems(Auu, Aut, Att, b_u, b_t, dofs, ub)


def local_systems(mesh, problem, params=None):
    params = params or SchemeParams()
    eta = params.penalties(mesh, problem)
    tau = eta / mesh.edge_length
    Auu, Aut, Att = local_matrices(mesh, problem.A, tau)
    b_u, b_t = _local_loads(mesh, problem, params, eta)
    return eliminate_boundary(mesh, Auu, Aut, Att, b_u, b_t, boundary_trace(mesh, problem))


def local_system(k, mesh, problem, params=None):
    return local_systems(mesh, problem, params)[k]


def scatter(local, with_loads=True):
    """Assemble the global symmetric matrix (and load) from batched blocks."""
    d = local.dofs
    E, nloc = local.A_uu.shape[:2]
    ids = np.concatenate([d.element_u, d.element_trace], axis=1)
    blocks = np.concatenate([
        np.concatenate([local.A_uu, local.A_ut], axis=2),
        np.concatenate([local.A_ut.transpose(0, 2, 1), local.A_tt], axis=2),
    ], axis=1)
    rows = np.broadcast_to(ids[:, :, None], blocks.shape)
    cols = np.broadcast_to(ids[:, None, :], blocks.shape)
    keep = (rows >= 0) & (cols >= 0)
    M = sp.coo_matrix((blocks[keep], (rows[keep], cols[keep])), shape=(d.n_total, d.n_total)).tocsr()
    if not with_loads:
        return M
    loads = np.concatenate([local.b_u, local.b_t], axis=1)
    b = np.zeros(d.n_total)
    valid = ids >= 0
    np.add.at(b, ids[valid], loads[valid])
    return M, b


def assemble(mesh, problem, params=None):
    """Global matrix over all (u, uhat) DOFs and the load vector."""
    return scatter(local_systems(mesh, problem, params))


def exact_dofs(mesh, problem, variant=PRIMARY):
    """Global DOF vector of the interpolated exact pair (u_I, uhat_I).

    Traces are the mean of the two one-sided traces on interior and interface
    edges; the alternative scheme instead takes the Omega_2 trace on the
    interface, matching its sign factor.
    """
    if not problem.has_exact:
        raise MissingExact(f"preset {problem.name!r} has no exact solution")
    d = dof_map(mesh)
    X = mesh.element_coords()
    uI = np.empty(X.shape[:2])
    for tag in (1, 2):
        sel = mesh.tags == tag
        if sel.any():
            uI[sel] = problem.exact_u[tag](X[sel])
    x = np.zeros(d.n_total)
    x[:d.n_u] = uI.ravel()
    # one-sided endpoint values per (element, local edge), in global edge orientation
    side = np.stack([uI, np.roll(uI, -1, axis=1)], axis=-1)           # (E, nloc, 2)
    side = np.where(mesh.element_edge_flip[..., None], side[..., ::-1], side)
    acc = np.zeros((mesh.n_edges, 2))
    wsum = np.zeros(mesh.n_edges)
    iface = mesh.edge_class[mesh.element_edges] == INTERFACE
    w = np.ones(mesh.element_edges.shape)
    if variant == ALTERNATIVE:
        w = np.where(iface, (mesh.tags[:, None] == 2).astype(float), 1.0)
    np.add.at(acc, mesh.element_edges, w[..., None] * side)
    np.add.at(wsum, mesh.element_edges, w)
    trace = acc / wsum[:, None]
    carries = d.edge_trace >= 0
    x[d.n_u + 2 * d.edge_trace[carries]] = trace[carries, 0]
    x[d.n_u + 2 * d.edge_trace[carries] + 1] = trace[carries, 1]
    return x

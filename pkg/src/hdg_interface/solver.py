"""Static condensation, trace-system solvers and recovery of element unknowns."""
from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import LocalSystems, local_systems, scatter
from .errors import InvalidParam, NoConvergence, NotPositiveDefinite, SingularLocalBlock

log = logging.getLogger(__name__)

LOCAL_COND_LIMIT = 1e13


@dataclass
class CondensedSystem:
    S: sp.csr_matrix            # trace-only Schur complement
    g: np.ndarray               # condensed load
    local: LocalSystems
    Auu_inv: np.ndarray         # (E, nloc, nloc)
    local_min_eig: np.ndarray   # (E,) smallest eigenvalue of each A_uu

    @property
    def dofs(self):
        return self.local.dofs

    @property
    def dim(self):
        return self.S.shape[0]


@dataclass
class DiscreteSolution:
    """Element coefficients ``u`` (E, nloc) and edge traces ``uhat`` (ned, 2).

    Rows of ``uhat`` on boundary edges hold the prescribed Dirichlet trace;
    they are not unknowns.
    """
    u: np.ndarray
    uhat: np.ndarray
    info: dict = field(default_factory=dict)

    def to_vector(self, dofs):
        x = np.zeros(dofs.n_total)
        x[:dofs.n_u] = self.u.ravel()
        carries = dofs.edge_trace >= 0
        t = dofs.edge_trace[carries]
        x[dofs.n_u + 2 * t] = self.uhat[carries, 0]
        x[dofs.n_u + 2 * t + 1] = self.uhat[carries, 1]
        return x


def condense(local):
    """Eliminate element-interior unknowns: S = A_tt - A_tu A_uu^-1 A_ut."""
    Auu = local.A_uu
    cond = np.linalg.cond(Auu)
    bad = np.flatnonzero(~np.isfinite(cond) | (cond > LOCAL_COND_LIMIT))
    if len(bad):
        raise SingularLocalBlock(bad[0])
    Auu_inv = np.linalg.inv(Auu)
    local_min_eig = np.linalg.eigvalsh(Auu)[:, 0]
    X = Auu_inv @ local.A_ut                               # (E, nloc, 2 nloc)
    Sloc = local.A_tt - local.A_ut.transpose(0, 2, 1) @ X
    gloc = local.b_t - np.einsum("eij,ei->ej", X, local.b_u)
    d = local.dofs
    ids = d.element_trace - d.n_u
    ids[d.element_trace < 0] = -1
    rows = np.broadcast_to(ids[:, :, None], Sloc.shape)
    cols = np.broadcast_to(ids[:, None, :], Sloc.shape)
    keep = (rows >= 0) & (cols >= 0)
    S = sp.coo_matrix((Sloc[keep], (rows[keep], cols[keep])), shape=(d.n_trace, d.n_trace)).tocsr()
    # symmetrize away rounding differences between the two triangles
    S = ((S + S.T) * 0.5).tocsr()
    g = np.zeros(d.n_trace)
    valid = ids >= 0
    np.add.at(g, ids[valid], gloc[valid])
    return CondensedSystem(S, g, local, Auu_inv, local_min_eig)


def _ldl_direct(S, g):
    if S.shape[0] == 0:
        return np.zeros(0)
    lu = spla.splu(S.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    pivots = lu.U.diagonal()
    if not np.array_equal(lu.perm_r, lu.perm_c) or np.any(pivots <= 0):
        raise NotPositiveDefinite("trace system has a nonpositive pivot; penalty too small?")
    return lu.solve(g)


def conjugate_gradient(S, g, tol=1e-12, maxiter=None, x0=None):
    """Jacobi-preconditioned CG.  Returns ``(x, iterations, relative residual)``."""
    n = S.shape[0]
    maxiter = 10 * max(n, 1) if maxiter is None else maxiter
    gnorm = np.linalg.norm(g)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if gnorm == 0.0:
        return np.zeros(n), 0, 0.0
    diag = S.diagonal()
    if np.any(diag <= 0):
        raise NotPositiveDefinite("trace system has a nonpositive diagonal entry")
    Minv = 1.0 / diag
    r = g - S @ x
    z = Minv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Sp = S @ p
        curv = p @ Sp
        if curv <= 0:
            raise NotPositiveDefinite("negative curvature encountered in CG")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Sp
        res = np.linalg.norm(r) / gnorm
        if res <= tol:
            return x, it, res
        z = Minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NoConvergence(maxiter, res)


def solve(cs, method="direct", tol=1e-12):
    """Solve the condensed trace system; returns ``(x, info)``.

    The full matrix is SPD iff every element block and the Schur complement
    are, so an indefinite element block is reported as
    :class:`NotPositiveDefinite` even if ``S`` alone would factor.
    """
    S, g = cs.S, cs.g
    bad = np.flatnonzero(cs.local_min_eig <= 0)
    if len(bad):
        raise NotPositiveDefinite(f"element block {bad[0]} is not positive definite; penalty too small?")
    if method == "direct":
        x = _ldl_direct(S, g)
        info = {"method": "direct", "iterations": None}
    elif method == "cg":
        x, its, _ = conjugate_gradient(S, g, tol=tol)
        info = {"method": "cg", "iterations": its}
    else:
        raise InvalidParam(f"unknown solver {method!r}")
    gnorm = np.linalg.norm(g)
    res = np.linalg.norm(S @ x - g)
    info["residual"] = res / gnorm if gnorm > 0 else res
    if method == "direct" and res > 1e-10 * gnorm:
        log.warning("direct solve residual %.3e exceeds 1e-10 relative", info["residual"])
    return x, info


def recover(cs, x):
    """Back-substitute element unknowns from the trace solution."""
    local, d = cs.local, cs.dofs
    xt = np.zeros((len(local.A_uu), d.element_trace.shape[1]))
    valid = d.element_trace >= 0
    xt[valid] = x[d.element_trace[valid] - d.n_u]
    rhs = local.b_u - np.einsum("eij,ej->ei", local.A_ut, xt)
    u = np.einsum("eij,ej->ei", cs.Auu_inv, rhs)
    uhat = local.boundary_trace.copy()
    carries = d.edge_trace >= 0
    t = d.edge_trace[carries]
    uhat[carries, 0] = x[2 * t]
    uhat[carries, 1] = x[2 * t + 1]
    return DiscreteSolution(u, uhat)


def solve_monolithic(local):
    """Solve the full (u, uhat) system without condensation; the oracle path."""
    M, b = scatter(local)
    x = spla.spsolve(M.tocsc(), b)
    d = local.dofs
    u = x[:d.n_u].reshape(-1, d.nloc)
    uhat = local.boundary_trace.copy()
    carries = d.edge_trace >= 0
    t = d.edge_trace[carries]
    uhat[carries, 0] = x[d.n_u + 2 * t]
    uhat[carries, 1] = x[d.n_u + 2 * t + 1]
    return DiscreteSolution(u, uhat, {"method": "monolithic", "dim": d.n_total})


def full_residual(local, sol):
    M, b = scatter(local)
    x = sol.to_vector(local.dofs)
    return np.linalg.norm(M @ x - b) / max(np.linalg.norm(b), 1e-300)


def solve_problem(mesh, problem, params=None, method="direct", tol=1e-12):
    """Assemble, condense, solve and recover."""
    local = local_systems(mesh, problem, params)
    cs = condense(local)
    x, info = solve(cs, method, tol)
    sol = recover(cs, x)
    info.update(condensed_dim=cs.dim, full_dim=cs.dofs.n_total)
    sol.info = info
    return sol

"""Numerical certificates for coercivity, boundedness and local inequalities.

Everything here is a dense eigenvalue computation on a concrete (small) mesh;
the results certify properties of that mesh and penalty only.
"""
from dataclasses import dataclass
import io
import math

import numpy as np
import scipy.linalg as sla

from . import fem
from .assembly import SchemeParams, local_systems, scatter
from .errors import InvalidParam, NoSignChange
from .norms import gram_matrix

MAX_DENSE_N = 8


@dataclass(frozen=True)
class CoercivityReport:
    mesh: str
    eta: float
    min_eig: float
    max_eig: float
    norm: str = "1h"

    @property
    def coercive(self):
        return self.min_eig > 0


def _check_symmetric(B, what="B"):
    scale = max(np.abs(B).max(), 1e-300)
    asym = np.abs(B - B.T).max()
    if asym > 1e-12 * scale:
        raise InvalidParam(f"{what} is not symmetric (max asymmetry {asym:.3e})")


def bilinear_matrix(mesh, problem, eta):
    """Dense matrix of B_h on V_h x V_h."""
    ls = local_systems(mesh, problem, SchemeParams(eta=eta))
    return scatter(ls, with_loads=False).toarray()


def pencil_extremes(B, N):
    _check_symmetric(B)
    _check_symmetric(N, "N")
    w = sla.eigh(B, N, eigvals_only=True)
    return float(w[0]), float(w[-1])


def coercivity_min_eig(mesh, problem, eta, norm="1h", norm_eta=None):
    """Smallest eigenvalue of ``B x = lambda N x`` with N the Gram matrix of an HDG norm.

    ``norm_eta`` sets the penalty used inside the norm (defaults to ``eta``).
    """
    if mesh.n > MAX_DENSE_N:
        raise InvalidParam(f"dense eigensolve limited to n <= {MAX_DENSE_N}")
    eta = float(eta)
    norm_eta = eta if norm_eta is None else float(norm_eta)
    B = bilinear_matrix(mesh, problem, eta)
    N = gram_matrix(mesh, np.full(mesh.n_edges, norm_eta), norm).toarray()
    lo, hi = pencil_extremes(B, N)
    return CoercivityReport(mesh.name, eta, lo, hi, norm)


def boundedness_constant(mesh, problem, eta):
    """Largest eigenvalue of (B, N_2h), an empirical boundedness constant on V_h."""
    return coercivity_min_eig(mesh, problem, eta, norm="2h").max_eig


def norm_equivalence_constant(mesh, eta):
    """Smallest C0 with ||v||_2h <= C0 ||v||_1h on V_h."""
    eta = np.full(mesh.n_edges, float(eta))
    N1 = gram_matrix(mesh, eta, "1h").toarray()
    N2 = gram_matrix(mesh, eta, "2h").toarray()
    return math.sqrt(pencil_extremes(N2, N1)[1])


def eta_star_estimate(mesh, problem, eta_low=1e-6, rtol=1e-5, strict=False):
    """Empirical coercivity threshold: smallest eta with a positive pencil eigenvalue.

    Found by bisection in log(eta).  If the form is already coercive at
    ``eta_low`` the threshold is reported as 0 (or :class:`NoSignChange` is
    raised when ``strict``).
    """
    def positive(eta):
        return coercivity_min_eig(mesh, problem, eta).min_eig > 0

    if positive(eta_low):
        if strict:
            raise NoSignChange(f"coercive already at eta={eta_low}")
        return 0.0
    hi = 10.0 * problem.A.lambda_max
    while not positive(hi):
        hi *= 2
        if hi > 1e12:
            raise NoSignChange("no coercive penalty found below 1e12")
    lo = eta_low
    while hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        if positive(mid):
            hi = mid
        else:
            lo = mid
    return hi


def eta_sweep(mesh, problem, etas):
    return [coercivity_min_eig(mesh, problem, eta) for eta in etas]


def _max_rayleigh(num, den, rtol=1e-10):
    """max v'num v / v'den v over v outside the null space of ``den``."""
    w, V = np.linalg.eigh(den)
    keep = w > rtol * w.max()
    Q = V[:, keep] / np.sqrt(w[keep])
    return float(np.linalg.eigvalsh(Q.T @ num @ Q).max())


def _element_grams(kind, coords):
    coords = np.asarray(coords, dtype=float)[None]
    rule = fem.quad_rule(kind, 4)
    mp = fem.map_points(kind, coords, rule.points)
    w = (mp.detJ * rule.weights)[0]
    N, G = mp.values[0], mp.grads[0]
    mass = np.einsum("q,qi,qj->ij", w, N, N)
    stiff = np.einsum("q,qia,qja->ij", w, G, G)
    H = fem.hessians_axis_aligned(kind, coords)[0]
    area = w.sum()
    h2 = area * (np.outer(H[:, 0], H[:, 0]) + np.outer(H[:, 1], H[:, 1]) + np.outer(H[:, 2], H[:, 2]))
    return mass, stiff, h2


def _edge_grams(kind, coords, l):
    coords = np.asarray(coords, dtype=float)
    nloc = len(coords)
    rule = fem.quad_rule("edge", 4)
    s = (rule.points + 1) / 2
    ref = fem.REFERENCE_VERTICES[kind]
    pts = ref[l] + s[:, None] * (ref[(l + 1) % nloc] - ref[l])
    mp = fem.map_points(kind, coords[None], pts)
    he = float(np.linalg.norm(coords[(l + 1) % nloc] - coords[l]))
    w = rule.weights * he / 2
    N, G = mp.values[0], mp.grads[0]
    return (np.einsum("q,qi,qj->ij", w, N, N), np.einsum("q,qia,qja->ij", w, G, G), he)


def inequality_probe(kind, coords, which):
    """Empirical constant of a local inverse or trace inequality on one element.

    ``which`` is ``"inverse"`` (|v|_1^2 <= C h_K^-2 ||v||^2), ``"trace0"``
    (||v||_e^2 <= C h_e^-1 (||v||^2 + h_K^2 |v|_1^2)) or ``"trace1"``
    (||grad v||_e^2 <= C h_e^-1 (|v|_1^2 + h_K^2 |v|_2^2)); trace constants
    are maximized over the element's edges.
    """
    coords = np.asarray(coords, dtype=float)
    hK = float(np.max(np.linalg.norm(coords[:, None] - coords[None], axis=-1)))
    mass, stiff, h2 = _element_grams(kind, coords)
    if which == "inverse":
        return _max_rayleigh(stiff, mass / hK**2)
    if which not in ("trace0", "trace1"):
        raise InvalidParam(f"unknown inequality {which!r}")
    best = 0.0
    for l in range(len(coords)):
        emass, egrad, he = _edge_grams(kind, coords, l)
        if which == "trace0":
            c = _max_rayleigh(emass, (mass + hK**2 * stiff) / he)
        else:
            c = _max_rayleigh(egrad, (stiff + hK**2 * h2) / he)
        best = max(best, c)
    return best


def reports_csv(reports, path=None):
    buf = io.StringIO()
    buf.write("mesh,eta,min_eig\n")
    for r in reports:
        buf.write(f"{r.mesh},{r.eta:.6g},{r.min_eig:.6g}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text

"""Reference elements, shape functions and quadrature.

Reference domains
-----------------
* triangle:  {(xi, eta): xi >= 0, eta >= 0, xi + eta <= 1}, vertices
  (0,0), (1,0), (0,1)
* rectangle: [-1, 1]^2, vertices (-1,-1), (1,-1), (1,1), (-1,1)
* edge:      [-1, 1]

Local vertices are numbered counter-clockwise and local edge ``l`` runs from
local vertex ``l`` to local vertex ``(l + 1) % nverts``.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .errors import InvalidParam

TRIANGLE = "triangle"
RECTANGLE = "rectangle"
ELEMENT_KINDS = (TRIANGLE, RECTANGLE)

MAX_DEGREE = 9

REFERENCE_VERTICES = {
    TRIANGLE: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    RECTANGLE: np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]),
}

REFERENCE_MEASURE = {"edge": 2.0, TRIANGLE: 0.5, RECTANGLE: 4.0}


def n_nodes(kind):
    return len(REFERENCE_VERTICES[kind])


@dataclass(frozen=True)
class QuadratureRule:
    domain: str
    points: np.ndarray   # (nq,) on an edge, (nq, 2) otherwise
    weights: np.ndarray  # (nq,)
    degree: int

    def __len__(self):
        return len(self.weights)


def _gauss_legendre(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


def quad_rule(domain, degree):
    """Return a quadrature rule on a reference domain exact to ``degree``.

    Edge and rectangle rules are (tensor) Gauss-Legendre.  On the triangle,
    degree <= 1 uses the centroid, degree 2 the edge-midpoint rule and higher
    degrees a collapsed (Duffy) Gauss-Jacobi x Gauss-Legendre product.
    """
    if not isinstance(degree, (int, np.integer)) or degree < 0 or degree > MAX_DEGREE:
        raise InvalidParam(f"unsupported quadrature degree {degree!r} (0..{MAX_DEGREE})")
    degree = int(degree)
    npts = max(1, math.ceil((degree + 1) / 2))
    if domain == "edge":
        x, w = _gauss_legendre(npts)
        return QuadratureRule("edge", x, w, degree)
    if domain == RECTANGLE:
        x, w = _gauss_legendre(npts)
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        return QuadratureRule(RECTANGLE, pts, W.ravel(), degree)
    if domain == TRIANGLE:
        if degree <= 1:
            return QuadratureRule(TRIANGLE, np.array([[1 / 3, 1 / 3]]), np.array([0.5]), degree)
        if degree == 2:
            pts = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
            return QuadratureRule(TRIANGLE, pts, np.full(3, 1 / 6), degree)
        # xi = a, eta = (1 - a) b; the Jacobian factor (1 - a) is absorbed by
        # Gauss-Jacobi with alpha = 1 on [0, 1].
        a, wa = special.roots_jacobi(npts, 1.0, 0.0)
        a = (a + 1) / 2
        wa = wa / 4
        b, wb = _gauss_legendre(npts)
        b = (b + 1) / 2
        wb = wb / 2
        A, B = np.meshgrid(a, b, indexing="ij")
        pts = np.column_stack([A.ravel(), ((1 - A) * B).ravel()])
        return QuadratureRule(TRIANGLE, pts, np.outer(wa, wb).ravel(), degree)
    raise InvalidParam(f"unknown quadrature domain {domain!r}")


def basis_eval(kind, points):
    """Evaluate the nodal basis of ``kind`` at reference ``points``.

    ``points`` has shape ``(..., 2)``.  Returns ``values`` of shape
    ``(..., nnodes)`` and reference gradients of shape ``(..., nnodes, 2)``.
    """
    p = np.asarray(points, dtype=float)
    xi, eta = p[..., 0], p[..., 1]
    if kind == TRIANGLE:
        values = np.stack([1 - xi - eta, xi, eta], axis=-1)
        g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        grads = np.broadcast_to(g, p.shape[:-1] + (3, 2)).copy()
        return values, grads
    if kind == RECTANGLE:
        sx = np.array([-1.0, 1.0, 1.0, -1.0])
        sy = np.array([-1.0, -1.0, 1.0, 1.0])
        fx = 1 + xi[..., None] * sx
        fy = 1 + eta[..., None] * sy
        values = fx * fy / 4
        grads = np.stack([sx * fy / 4, fx * sy / 4], axis=-1)
        return values, grads
    raise InvalidParam(f"unknown element kind {kind!r}")


def reference_mixed_derivative(kind):
    """d^2 N_i / (d xi d eta) on the reference element (constant per node)."""
    if kind == TRIANGLE:
        return np.zeros(3)
    return np.array([1.0, -1.0, 1.0, -1.0]) / 4


@dataclass
class MappedPoints:
    """Reference points pushed through the element maps of a batch of elements."""
    x: np.ndarray       # (E, q, 2) physical coordinates
    values: np.ndarray  # (E, q, n) basis values
    grads: np.ndarray   # (E, q, n, 2) physical gradients
    detJ: np.ndarray    # (E, q)


def map_points(kind, coords, ref_points):
    """Map reference points into each element of a batch.

    ``coords`` is ``(E, n, 2)``; ``ref_points`` is either shared ``(q, 2)``
    or per element ``(E, q, 2)``.
    """
    coords = np.asarray(coords, dtype=float)
    ref = np.asarray(ref_points, dtype=float)
    values, dref = basis_eval(kind, ref)
    if ref.ndim == 2:
        values = np.broadcast_to(values, (coords.shape[0],) + values.shape)
        dref = np.broadcast_to(dref, (coords.shape[0],) + dref.shape)
    x = np.einsum("eqi,eia->eqa", values, coords)
    J = np.einsum("eia,eqib->eqab", coords, dref)
    detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    invJ = np.empty_like(J)
    invJ[..., 0, 0] = J[..., 1, 1] / detJ
    invJ[..., 1, 1] = J[..., 0, 0] / detJ
    invJ[..., 0, 1] = -J[..., 0, 1] / detJ
    invJ[..., 1, 0] = -J[..., 1, 0] / detJ
    grads = np.einsum("eqib,eqba->eqia", dref, invJ)
    return MappedPoints(x=x, values=np.ascontiguousarray(values), grads=grads, detJ=detJ)


def inverse_map(kind, coords, x):
    """Reference coordinates of physical points ``x`` (E, q, 2) in affine-mapped elements.

    Rectangles are treated as parallelograms spanned at local vertex 0, which is
    exact for the axis-aligned cells produced by :mod:`hdg_interface.mesh`.
    """
    coords = np.asarray(coords, dtype=float)
    x0 = coords[:, 0, :]
    if kind == TRIANGLE:
        a, b = coords[:, 1] - x0, coords[:, 2] - x0
    else:
        a, b = (coords[:, 1] - x0) / 2, (coords[:, 3] - x0) / 2
    M = np.stack([a, b], axis=-1)  # (E, 2, 2), columns a, b
    rhs = np.asarray(x, dtype=float) - x0[:, None, :]
    ref = np.linalg.solve(M[:, None, :, :], rhs[..., None])[..., 0]
    if kind == RECTANGLE:
        ref = ref - 1.0
    return ref


def hessians_axis_aligned(kind, coords):
    """Physical second derivatives (N_xx, N_xy, N_yy) of the basis, per element.

    Valid for affine triangles (all zero) and axis-aligned rectangles, where
    only the mixed derivative survives.  Returns shape ``(E, n, 3)``.
    """
    coords = np.asarray(coords, dtype=float)
    E = coords.shape[0]
    out = np.zeros((E, n_nodes(kind), 3))
    if kind == RECTANGLE:
        hx = coords[:, 1, 0] - coords[:, 0, 0]
        hy = coords[:, 3, 1] - coords[:, 0, 1]
        out[:, :, 1] = reference_mixed_derivative(kind)[None, :] * (4 / (hx * hy))[:, None]
    return out

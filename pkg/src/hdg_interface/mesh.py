"""Uniform interface-aligned meshes of the unit square.

Cells of an ``n x n`` grid are either used directly (Q1 rectangles) or split
along the lower-left to upper-right diagonal into two triangles.  Element ids
follow the cell index ``c = j * n + i`` (rectangles) or ``2c, 2c + 1``
(triangles), which makes point location and nesting between levels trivial.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from .errors import AlignmentError, InvalidParam, UnknownPreset
from .fem import ELEMENT_KINDS, RECTANGLE, TRIANGLE

INTERIOR = 0
INTERFACE = 1
BOUNDARY = 2
EDGE_CLASS_NAMES = {INTERIOR: "INTERIOR", INTERFACE: "INTERFACE", BOUNDARY: "BOUNDARY"}


@dataclass(frozen=True)
class Geometry:
    """Two-subdomain partition of the unit square with a polygonal interface.

    ``subdomain`` maps points (strictly inside cells) to tags 1 or 2.
    ``breakpoints`` are the coordinates that must fall on grid lines.
    """
    name: str
    subdomain: Callable[[np.ndarray, np.ndarray], np.ndarray]
    interface: tuple  # segments ((x0, y0), (x1, y1))
    breakpoints: tuple

    @property
    def interface_length(self):
        return sum(float(np.hypot(b[0] - a[0], b[1] - a[1])) for a, b in self.interface)

    def aligned(self, n):
        return all((Fraction(p) * n).denominator == 1 for p in self.breakpoints)


def horizontal_interface(y0, name=None):
    """Omega_1 below the line y = y0, Omega_2 above it."""
    y0 = Fraction(y0)
    yf = float(y0)
    return Geometry(
        name=name or f"horizontal({y0})",
        subdomain=lambda x, y: np.where(y < yf, 1, 2),
        interface=(((0.0, yf), (1.0, yf)),),
        breakpoints=(y0,),
    )


def _staircase_subdomain(x, y):
    above = np.where(x < 0.5, y > 0.5, y > 0.75)
    return np.where(above, 2, 1)


GEOMETRIES = {
    "example1": horizontal_interface(Fraction(1, 2), name="example1"),
    "example2": Geometry(
        name="example2",
        subdomain=_staircase_subdomain,
        interface=(
            ((0.0, 0.5), (0.5, 0.5)),
            ((0.5, 0.5), (0.5, 0.75)),
            ((0.5, 0.75), (1.0, 0.75)),
        ),
        breakpoints=(Fraction(1, 2), Fraction(3, 4)),
    ),
}


def get_geometry(geometry):
    if isinstance(geometry, Geometry):
        return geometry
    try:
        return GEOMETRIES[geometry]
    except KeyError:
        raise UnknownPreset(f"unknown geometry {geometry!r}") from None


class Edge(NamedTuple):
    vertices: tuple
    kind: int
    length: float
    normal: tuple
    elements: tuple  # (first, second); second is -1 on the boundary


@dataclass(eq=False)
class Mesh:
    geometry: Geometry
    n: int
    kind: str
    vertices: np.ndarray        # (nv, 2)
    elements: np.ndarray        # (ne, nloc) counter-clockwise vertex ids
    tags: np.ndarray            # (ne,) subdomain tag 1 or 2
    edge_vertices: np.ndarray   # (ned, 2)
    edge_class: np.ndarray      # (ned,)
    edge_length: np.ndarray     # (ned,)
    edge_normal: np.ndarray     # (ned, 2) outward normal of edge_elements[:, 0]
    edge_elements: np.ndarray   # (ned, 2)
    element_edges: np.ndarray   # (ne, nloc) local edge l joins local vertices l, l+1
    element_edge_sign: np.ndarray  # (ne, nloc) +1 if edge_normal is outward for the element
    element_edge_flip: np.ndarray  # (ne, nloc) True if local edge runs against the global edge
    h: float = field(init=False)

    def __post_init__(self):
        self.h = float(self.diameters().max())
        for arr in (self.vertices, self.elements, self.tags, self.edge_vertices, self.edge_class,
                    self.edge_length, self.edge_normal, self.edge_elements, self.element_edges,
                    self.element_edge_sign, self.element_edge_flip):
            arr.flags.writeable = False

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_edges(self):
        return len(self.edge_vertices)

    @property
    def nloc(self):
        return self.elements.shape[1]

    @property
    def name(self):
        return f"{self.geometry.name}-{self.kind}-n{self.n}"

    def element_coords(self, ids=None):
        el = self.elements if ids is None else self.elements[ids]
        return self.vertices[el]

    def edge(self, i):
        return Edge(
            vertices=tuple(int(v) for v in self.edge_vertices[i]),
            kind=int(self.edge_class[i]),
            length=float(self.edge_length[i]),
            normal=tuple(float(c) for c in self.edge_normal[i]),
            elements=tuple(int(k) for k in self.edge_elements[i]),
        )

    def edges_of_class(self, cls):
        return np.flatnonzero(self.edge_class == cls)

    def areas(self):
        c = self.element_coords()
        x, y = c[..., 0], c[..., 1]
        return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)

    def diameters(self):
        c = self.element_coords()
        d = np.linalg.norm(c[:, :, None, :] - c[:, None, :, :], axis=-1)
        return d.max(axis=(1, 2))

    def inscribed_diameters(self):
        if self.kind == TRIANGLE:
            perim = self.edge_length[self.element_edges].sum(axis=1)
            return 4 * self.areas() / perim
        return self.edge_length[self.element_edges].min(axis=1)

    def locate(self, points):
        """Element id containing each point (points on shared edges go to either side)."""
        p = np.asarray(points, dtype=float)
        i = np.clip(np.floor(p[..., 0] * self.n).astype(int), 0, self.n - 1)
        j = np.clip(np.floor(p[..., 1] * self.n).astype(int), 0, self.n - 1)
        cell = j * self.n + i
        if self.kind == RECTANGLE:
            return cell
        dx = p[..., 0] * self.n - i
        dy = p[..., 1] * self.n - j
        return 2 * cell + (dy > dx)

    def refine(self):
        return build_mesh(self.geometry, 2 * self.n, self.kind)

    def refines(self, coarse):
        """True if this mesh is a nested refinement of ``coarse``."""
        return (self.kind == coarse.kind and self.geometry.name == coarse.geometry.name
                and self.n % coarse.n == 0 and self.n >= coarse.n)

    def dump(self, path_or_file):
        """Write VERTICES / ELEMENTS / EDGES sections, one record per line, ids 0-based."""
        lines = ["VERTICES"]
        lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(self.vertices)]
        lines.append("ELEMENTS")
        for k, (vs, tag) in enumerate(zip(self.elements, self.tags)):
            lines.append(f"{k} {self.kind} {int(tag)} " + " ".join(str(int(v)) for v in vs))
        lines.append("EDGES")
        for e in range(self.n_edges):
            a, b = self.edge_vertices[e]
            k0, k1 = self.edge_elements[e]
            lines.append(f"{e} {a} {b} {EDGE_CLASS_NAMES[int(self.edge_class[e])]} "
                         f"{self.edge_length[e]:.17g} {k0} {k1}")
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(text)


def _grid(n, kind):
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    jj, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (jj * (n + 1) + ii).ravel()
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    if kind == RECTANGLE:
        elements = np.column_stack([v00, v10, v11, v01])
    else:
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
        elements = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return vertices, elements


def _classify_edges(vertices, elements, tags):
    ne, nloc = elements.shape
    a = elements
    b = np.roll(elements, -1, axis=1)
    lo, hi = np.minimum(a, b).ravel(), np.maximum(a, b).ravel()
    keys = np.column_stack([lo, hi])
    edge_vertices, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    element_edges = inverse.reshape(ne, nloc)
    ned = len(edge_vertices)

    owner = np.repeat(np.arange(ne), nloc)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=ned)
    if counts.max() > 2:
        raise InvalidParam("non-manifold mesh: an edge is shared by more than two elements")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    edge_elements = np.full((ned, 2), -1, dtype=int)
    edge_elements[:, 0] = owner[order[starts]]
    two = counts == 2
    edge_elements[two, 1] = owner[order[starts[two] + 1]]

    edge_class = np.full(ned, INTERIOR, dtype=int)
    edge_class[~two] = BOUNDARY
    t0 = tags[edge_elements[:, 0]]
    t1 = np.where(two, tags[np.maximum(edge_elements[:, 1], 0)], t0)
    iface = two & (t0 != t1)
    edge_class[iface] = INTERFACE
    swap = iface & (t0 == 2)
    edge_elements[swap] = edge_elements[swap][:, ::-1]

    # outward normal of the first element: rotate its local edge tangent clockwise
    first = edge_elements[:, 0]
    local = np.argmax(element_edges[first] == np.arange(ned)[:, None], axis=1)
    pa = vertices[elements[first, local]]
    pb = vertices[elements[first, (local + 1) % nloc]]
    t = pb - pa
    length = np.linalg.norm(t, axis=1)
    normal = np.column_stack([t[:, 1], -t[:, 0]]) / length[:, None]

    element_edge_sign = np.where(edge_elements[element_edges, 0] == np.arange(ne)[:, None], 1, -1)
    element_edge_flip = a != edge_vertices[element_edges, 0]
    return (edge_vertices, edge_class, length, normal, edge_elements,
            element_edges, element_edge_sign, element_edge_flip)


def _check_interface(mesh):
    geom = mesh.geometry
    ids = mesh.edges_of_class(INTERFACE)
    total = mesh.edge_length[ids].sum()
    mid = mesh.vertices[mesh.edge_vertices[ids]].mean(axis=1)
    on_gamma = np.zeros(len(ids), dtype=bool)
    for (x0, y0), (x1, y1) in geom.interface:
        d = np.array([x1 - x0, y1 - y0])
        L = np.hypot(*d)
        rel = mid - np.array([x0, y0])
        s = rel @ d / L**2
        off = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / L
        on_gamma |= (off < 1e-12) & (s > -1e-12) & (s < 1 + 1e-12)
    if not on_gamma.all() or abs(total - geom.interface_length) > 1e-12:
        raise AlignmentError(f"interface edges do not cover the interface of {geom.name} at n={mesh.n}")


def build_mesh(geometry, n, element_kind=RECTANGLE):
    """Build the uniform ``n x n`` mesh of ``geometry``.

    Raises :class:`AlignmentError` if some interface segment does not lie on
    grid lines at this ``n``.
    """
    geom = get_geometry(geometry)
    if element_kind not in ELEMENT_KINDS:
        raise InvalidParam(f"unknown element kind {element_kind!r}")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidParam(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    if not geom.aligned(n):
        raise AlignmentError(f"interface of {geom.name} is not on grid lines for n={n}")
    vertices, elements = _grid(n, element_kind)
    centroids = vertices[elements].mean(axis=1)
    tags = np.asarray(geom.subdomain(centroids[:, 0], centroids[:, 1]), dtype=int)
    mesh = Mesh(geom, n, element_kind, vertices, elements, tags, *_classify_edges(vertices, elements, tags))
    _check_interface(mesh)
    return mesh


def mesh_metrics(mesh):
    """Return ``(h, min rho_K, realized nu_1)`` for the shape-regularity bound."""
    hK = mesh.diameters()
    rho = mesh.inscribed_diameters()
    he = mesh.edge_length[mesh.element_edges]
    nu = np.maximum(he / rho[:, None], hK[:, None] / he).max()
    return float(hK.max()), float(rho.min()), float(nu)

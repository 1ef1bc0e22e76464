"""PDE data for the interface problem and the built-in presets.

All callables take an array of points with shape ``(..., 2)`` and return
values of shape ``(...)`` (scalars), ``(..., 2)`` (gradients) or
``(..., 2, 2)`` (coefficient matrices).  Per-subdomain data are dicts keyed by
the subdomain tag (1 or 2).
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParam, MissingExact, UnknownPreset
from .mesh import get_geometry

PRESETS = ("example1", "example2", "patch")


@dataclass(frozen=True)
class CoefficientField:
    matrix: dict                 # tag -> callable(points) -> (..., 2, 2)
    lambda_min: float
    lambda_max: float

    @property
    def alpha(self):
        # operator-norm bound; equals lambda_max for symmetric A
        return self.lambda_max

    def __call__(self, points, tag):
        return self.matrix[tag](points)

    @classmethod
    def piecewise_scalar(cls, values):
        """A = lambda_i * I on subdomain i."""
        def make(lam):
            return lambda p: lam * np.broadcast_to(np.eye(2), np.shape(p)[:-1] + (2, 2))
        return cls({t: make(float(v)) for t, v in values.items()},
                   float(min(values.values())), float(max(values.values())))

    def scaled(self, c):
        return CoefficientField({t: (lambda p, g=g: c * g(p)) for t, g in self.matrix.items()},
                                c * self.lambda_min, c * self.lambda_max)


@dataclass(frozen=True)
class ProblemData:
    name: str
    geometry: str
    A: CoefficientField
    f: dict                                  # tag -> callable
    g_D: Callable                            # u|Omega1 - u|Omega2 on the interface
    g_N: Callable                            # flux-sum datum on the interface
    exact_u: Optional[dict] = None           # tag -> callable
    exact_grad: Optional[dict] = None        # tag -> callable, returns (..., 2)
    boundary: Optional[dict] = None          # tag -> Dirichlet trace on the outer boundary; None means 0
    s: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def has_exact(self):
        return self.exact_u is not None

    def with_coefficient(self, A, f=None):
        return ProblemData(self.name, self.geometry, A, f if f is not None else self.f, self.g_D,
                           self.g_N, self.exact_u, self.exact_grad, self.boundary, self.s, dict(self.meta))


def _sinsin(sign):
    return lambda p: sign * np.sin(np.pi * p[..., 0]) * np.sin(np.pi * p[..., 1])


def _sinsin_grad(sign):
    def grad(p):
        x, y = p[..., 0], p[..., 1]
        return sign * np.pi * np.stack([np.cos(np.pi * x) * np.sin(np.pi * y),
                                        np.sin(np.pi * x) * np.cos(np.pi * y)], axis=-1)
    return grad


def _example_data():
    A = CoefficientField.piecewise_scalar({1: 4.0, 2: 1.0})
    f = {1: lambda p: 8 * np.pi**2 * _sinsin(1)(p),
         2: lambda p: -2 * np.pi**2 * _sinsin(1)(p)}
    return A, f


def _example1():
    A, f = _example_data()
    u = {1: _sinsin(1.0), 2: _sinsin(-1.0)}
    grad = {1: _sinsin_grad(1.0), 2: _sinsin_grad(-1.0)}
    n1 = np.array([0.0, 1.0])

    def g_D(p):
        return u[1](p) - u[2](p)

    def g_N(p):
        flux1 = np.einsum("...ab,...b->...a", A(p, 1), grad[1](p))
        flux2 = np.einsum("...ab,...b->...a", A(p, 2), grad[2](p))
        return (flux1 - flux2) @ n1

    return ProblemData("example1", "example1", A, f, g_D, g_N, u, grad, None, s=1.0)


def _example2():
    A, f = _example_data()

    def g_D(p):
        # 2 sin(pi x) on the horizontal pieces, 2 on the vertical piece x = 1/2,
        # where 2 sin(pi/2) = 2 as well
        x = p[..., 0]
        vertical = np.isclose(x, 0.5)
        return np.where(vertical, 2.0, 2 * np.sin(np.pi * x))

    def g_N(p):
        return np.zeros(np.shape(p)[:-1])

    # regularity index is only known to lie in (1/2, 1)
    return ProblemData("example2", "example2", A, f, g_D, g_N, None, None, None, s=0.75,
                       meta={"s_range": (0.5, 1.0)})


def _patch():
    A = CoefficientField.piecewise_scalar({1: 1.0, 2: 1.0})
    zero = lambda p: np.zeros(np.shape(p)[:-1])
    u = {1: lambda p: p[..., 0] + 0.0, 2: lambda p: p[..., 0] + 1.0}
    ex = lambda p: np.broadcast_to(np.array([1.0, 0.0]), np.shape(p)).copy()
    return ProblemData("patch", "example1", A, {1: zero, 2: zero},
                       g_D=lambda p: np.full(np.shape(p)[:-1], -1.0), g_N=zero,
                       exact_u=u, exact_grad={1: ex, 2: ex}, boundary=u, s=1.0)


def preset(name):
    """Return ``(geometry, ProblemData)`` for a named preset."""
    builders = {"example1": _example1, "example2": _example2, "patch": _patch}
    try:
        problem = builders[name]()
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return get_geometry(problem.geometry), problem


def eval_problem(problem, which, points, tag=1):
    """Evaluate one ingredient of ``problem`` at ``points`` on subdomain ``tag``."""
    p = np.asarray(points, dtype=float)
    if which == "A":
        return problem.A(p, tag)
    if which == "f":
        return problem.f[tag](p)
    if which == "gD":
        return problem.g_D(p)
    if which == "gN":
        return problem.g_N(p)
    if which in ("exact_u", "exact_grad"):
        if not problem.has_exact:
            raise MissingExact(f"preset {problem.name!r} has no exact solution")
        table = problem.exact_u if which == "exact_u" else problem.exact_grad
        return table[tag](p)
    raise InvalidParam(f"unknown quantity {which!r}")


def dirichlet_trace(problem, points, tag):
    """Outer-boundary value of u on the side of subdomain ``tag``."""
    p = np.asarray(points, dtype=float)
    if problem.boundary is None:
        return np.zeros(p.shape[:-1])
    return problem.boundary[tag](p)

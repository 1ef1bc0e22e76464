"""Hybridized DG solver for 2D elliptic interface problems with solution and flux jumps."""
from .assembly import ALTERNATIVE, PRIMARY, SchemeParams, assemble, local_systems
from .mesh import build_mesh, mesh_metrics
from .norms import errors, h1_broken_error, hdg_norm, l2_error, rates
from .problem import eval_problem, preset
from .solver import condense, recover, solve, solve_monolithic, solve_problem

__version__ = "0.1.0"

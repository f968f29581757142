"""Isogeometric solid-shell elements with local projections against locking.

Modules
-------
splines      NURBS patches, basis evaluation, knot insertion, degree elevation
quadrature   Gauss-Legendre rules
projection   element-wise L2 projectors onto reduced polynomial spaces
elements     kinematics, material law and the STD / CURV / SS_ANS / SS stiffness
assembly     global DOFs, loads, constraints and the sparse solve
geometry     exact benchmark geometries
benchmarks   the five benchmark problems and a run driver
cli          command-line sweeps and self-checks
"""

from .assembly import DofMap, LinearSystem, SingularSystemError, assemble, solve
from .benchmarks import BENCHMARKS, BenchmarkCase, RunResult, make_case, run
from .elements import Formulation, PatchElements, material_matrix, stiffness
from .projection import appendix_constants, build_projector, projectors_for_degree
from .quadrature import gauss_legendre, tensor_rule
from .splines import (DomainError, KnotVector, NurbsPatch3d, SingularGeometryError,
                      elevate_degree, eval_nurbs_3d, insert_knots)

__version__ = "0.1.0"

__all__ = [
    "BENCHMARKS", "BenchmarkCase", "DofMap", "DomainError", "Formulation", "KnotVector",
    "LinearSystem", "NurbsPatch3d", "PatchElements", "RunResult", "SingularGeometryError",
    "SingularSystemError", "appendix_constants", "assemble", "build_projector", "elevate_degree",
    "eval_nurbs_3d", "gauss_legendre", "insert_knots", "make_case", "material_matrix",
    "projectors_for_degree", "run", "solve", "stiffness", "tensor_rule",
]

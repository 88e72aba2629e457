"""Mixed finite elements for two plates rigidly joined along a common edge.

Stresses N and moments M are approximated by a symmetric H(div) element of
degree 3 and an H(divDiv) element of degree 4; displacements and deflections
by discontinuous quadratics.  Boundary, junction and corner conditions enter
as linear constraints on the stress unknowns and are eliminated before the
saddle-point solve.
"""

from .assembly import FieldSolution, SaddleSystem, assemble, measure_infsup, solve
from .constraints import all_constraints, reduce
from .dofs import CoupledSpaces
from .elements import ch_element, dg_scalar_p2, dg_vector_p2, hz_element
from .errors import (
    ElementConstructionError,
    GeometryError,
    InconsistentConstraints,
    PlateJunctionError,
    QuadratureError,
    SolveError,
)
from .experiments import (
    ConvergenceReport,
    ExactSolution,
    MaterialLaw,
    RoofGeometry,
    compute_errors,
    example1_exact,
    run_convergence,
    run_example2,
)
from .mesh import CoupledMesh, PlateDescriptor, build_coupled_mesh, mesh_at_level, refine_uniform

__version__ = "0.1.0"

__all__ = [
    "CoupledMesh",
    "CoupledSpaces",
    "ConvergenceReport",
    "ElementConstructionError",
    "ExactSolution",
    "FieldSolution",
    "GeometryError",
    "InconsistentConstraints",
    "MaterialLaw",
    "PlateDescriptor",
    "PlateJunctionError",
    "QuadratureError",
    "RoofGeometry",
    "SaddleSystem",
    "SolveError",
    "all_constraints",
    "assemble",
    "build_coupled_mesh",
    "ch_element",
    "compute_errors",
    "dg_scalar_p2",
    "dg_vector_p2",
    "example1_exact",
    "hz_element",
    "measure_infsup",
    "mesh_at_level",
    "reduce",
    "refine_uniform",
    "run_convergence",
    "run_example2",
    "solve",
]

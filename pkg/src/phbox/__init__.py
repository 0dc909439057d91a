"""Structure-preserving simulation of boundary-controlled first-order systems
in divergence form on axis-aligned box domains.

The package assembles summation-by-parts discretizations whose integration-
by-parts identity is exact, validates dissipative boundary conditions through
the contraction-semigroup criteria, and integrates the constrained dynamics
with the implicit midpoint rule so that energy balances hold to machine
precision.
"""

from .algebra import (HamiltonianDensitySpec, MatrixTuple, StructureMatrices,
                      build_block_tuple, constant_density, l_nu,
                      validate_hamiltonian)
from .bc import (BoundaryConditionSpec, DissipativeRelation, clamp_spec,
                 check_contraction_conditions, check_key_theorem_conditions,
                 impedance_spec, relation_dissipativity)
from .boundary import (BoundarySplitting, FaceNodeSet, TraceOperators,
                       assemble_traces, boundary_geometry, face_splitting,
                       kernel_identity_check, pointwise_projector)
from .gelfand import (FiniteQuasiTriple, dual_norm, duality_map, minus_triple,
                      transform_triple, von_neumann_check)
from .sbpgrid import (BoxGrid, FieldLayout, SbpOperator1D, assemble_diffop,
                      assemble_full_operator, box_grid,
                      green_identity_residual, sbp_1d)
from .system import (Colligation, add_dissipation, assemble_colligation,
                     generator_check, power_balance_residual,
                     scattering_transform)
from .timestepper import (SimulationConfig, SimulationResult, energy,
                          simulate, step_forced, step_homogeneous)
from . import models

__all__ = [
    "HamiltonianDensitySpec", "MatrixTuple", "StructureMatrices",
    "build_block_tuple", "constant_density", "l_nu", "validate_hamiltonian",
    "BoundaryConditionSpec", "DissipativeRelation", "clamp_spec",
    "check_contraction_conditions", "check_key_theorem_conditions",
    "impedance_spec", "relation_dissipativity",
    "BoundarySplitting", "FaceNodeSet", "TraceOperators", "assemble_traces",
    "boundary_geometry", "face_splitting", "kernel_identity_check",
    "pointwise_projector",
    "FiniteQuasiTriple", "dual_norm", "duality_map", "minus_triple",
    "transform_triple", "von_neumann_check",
    "BoxGrid", "FieldLayout", "SbpOperator1D", "assemble_diffop",
    "assemble_full_operator", "box_grid", "green_identity_residual", "sbp_1d",
    "Colligation", "add_dissipation", "assemble_colligation",
    "generator_check", "power_balance_residual", "scattering_transform",
    "SimulationConfig", "SimulationResult", "energy", "simulate",
    "step_forced", "step_homogeneous",
    "models",
]

__version__ = "0.1.0"

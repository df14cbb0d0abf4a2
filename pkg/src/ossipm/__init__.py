"""Inexact-feasible interior point methods built on orthogonal-subspace Newton systems."""

from .ifipm import IpmResult, Status, run_ifipm
from .lo_core import (
    FormTag,
    GeneratorSpec,
    Iterate,
    LoProblem,
    NeighborhoodParams,
    canonical_to_standard,
    generate_degenerate_standard,
    generate_instance,
    parameter_conditions,
)
from .refinement import RefinementResult, run_ir
from .self_dual import SelfDualProblem, classify, embed
from .solvers import make_backend

__all__ = [
    "FormTag", "GeneratorSpec", "IpmResult", "Iterate", "LoProblem", "NeighborhoodParams",
    "RefinementResult", "SelfDualProblem", "Status", "canonical_to_standard", "classify",
    "embed", "generate_degenerate_standard", "generate_instance", "make_backend",
    "parameter_conditions", "run_ifipm", "run_ir",
]

__version__ = "0.1.0"

"""Numerical laboratory for Banach-Mazur and von Neumann-Jordan constants,
oblique projection norms and Petrov-Galerkin error bounds."""

from .errors import (ArgumentError, ContractError, GenerationError, GeometryError,
                     NumericalError, SingularityError)
from .geoconst import cbm_estimate, cnj_estimate, dbm_to_euclidean, nj_ratio
from .opnorm import LinearMap, NormEstimate, inverse_norm, operator_norm
from .pglab import (BoundReport, PGProblem, assemble_fem_1d, best_approximation,
                    continuity_constant, infsup_constant, pg_projection, random_problem,
                    solve_pg, verify_bounds)
from .projlab import Projection, audit_projection, make_projection, random_projection
from .spaces import NormedSpace, TwoDimSubspace, dual_space, eval_norm, sample_unit_sphere

__all__ = [
    "ArgumentError", "ContractError", "GenerationError", "GeometryError", "NumericalError",
    "SingularityError", "cbm_estimate", "cnj_estimate", "dbm_to_euclidean", "nj_ratio",
    "LinearMap", "NormEstimate", "inverse_norm", "operator_norm", "BoundReport", "PGProblem",
    "assemble_fem_1d", "best_approximation", "continuity_constant", "infsup_constant",
    "pg_projection", "random_problem", "solve_pg", "verify_bounds", "Projection",
    "audit_projection", "make_projection", "random_projection", "NormedSpace", "TwoDimSubspace",
    "dual_space", "eval_norm", "sample_unit_sphere",
]

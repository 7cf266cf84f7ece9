"""Separable bilinear programming with successive approximation."""

from .bilinear import (
    Assignment,
    BilinearProgram,
    ResponsePlane,
    best_response,
    evaluate_objective,
    extract_incumbent,
    to_normal_form,
    to_semi_compact,
)
from .errors import BilinearError
from .lp import LpProblem, LpSolution, LpStatus, solve_lp, solve_lp_with_free_vars
from .pipeline import PipelineConfig, PipelineResult, run
from .reduction import ReductionResult, project_objective, reduce
from .solver import PivotMethod, SolverConfig, SolveResult, offline_bound, solve

__version__ = "0.1.0"

__all__ = [
    "Assignment", "BilinearProgram", "ResponsePlane", "best_response", "evaluate_objective",
    "extract_incumbent", "to_normal_form", "to_semi_compact", "BilinearError", "LpProblem",
    "LpSolution", "LpStatus", "solve_lp", "solve_lp_with_free_vars", "PipelineConfig",
    "PipelineResult", "run", "ReductionResult", "project_objective", "reduce", "PivotMethod",
    "SolverConfig", "SolveResult", "offline_bound", "solve",
]

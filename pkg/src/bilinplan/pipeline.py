"""Full solve pipeline: optional projection, reduction, then the anytime solver."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bilinear import Assignment, BilinearProgram, evaluate_objective, split_normal_form
from .reduction import ReductionResult, project_objective, reduce
from .solver import PivotMethod, SolverConfig, TraceRow, solve


ROUNDOFF = 1e-12


@dataclass(frozen=True)
class PipelineConfig:
    epsilon: float = 1e-4
    max_iter: int = 200
    method: PivotMethod = PivotMethod.LINEAR_BOUND
    presolve: int = 0
    seed: int = 0
    reduce_epsilon: float = 1e-4
    project: bool = False
    scale: str = "auto"

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.epsilon, self.max_iter, PivotMethod(self.method), self.presolve, self.seed)


@dataclass
class PipelineResult:
    assignment: Assignment
    value: float
    bound: float
    iterations: int
    trace: list[TraceRow] = field(default_factory=list)
    kept_dims: int = 0
    reduction_error: float = 0.0
    solver_value: float = 0.0
    solver_bound: float = 0.0


def run(p: BilinearProgram, config: PipelineConfig | None = None) -> PipelineResult:
    """Solve ``p`` and report an assignment of its own variables.

    ``value`` is the exact objective of that assignment. ``bound`` certifies
    f* ≤ value + bound, combining the solver's bound with the reduction error.
    """
    config = config or PipelineConfig()
    q = project_objective(p) if config.project else p
    if np.any(q.y_free):
        red = ReductionResult(q, q.ny, 0.0, np.eye(q.ny), np.zeros(0), original=q)
    else:
        red = reduce(q, config.reduce_epsilon, config.scale)
    result = solve(red.reduced_program, config.solver_config())
    lifted = red.lift(result.assignment)
    a = split_normal_form(p, lifted)
    value = evaluate_objective(p, a)
    e = red.error_bound
    bound = result.value + result.bound + e - value
    # lifting round-off is not a gap
    bound = 0.0 if bound <= ROUNDOFF * (1.0 + abs(value)) else bound
    trace = [replace(row, upper_bound=row.upper_bound + e, error_bound=row.error_bound + e)
             for row in result.trace]
    return PipelineResult(a, value, bound, result.iterations, trace, red.kept_dims, e,
                          result.value, result.bound)

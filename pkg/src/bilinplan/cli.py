"""Command-line interface: solve, reduce, oracle and benchmark commands."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .bilinear import Assignment
from .errors import (
    BilinearError,
    DimensionMismatch,
    InvalidModel,
    RankDeficientRows,
    TooLarge,
    XInfeasible,
    XUnbounded,
    YInfeasible,
    YUnbounded,
)
from .models import (
    compile_average_reward,
    compile_decmdp,
    compile_game,
    extract_policy,
    game_residual,
    generate_rover,
    oracle_enumerate,
)
from .pipeline import PipelineConfig, run
from .reduction import project_objective, reduce
from .solver import PivotMethod, TraceRow, clock_frozen

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_TOO_LARGE = 3
EXIT_CHECK = 4

TRACE_HEADER = ("iteration", "incumbent_value", "upper_bound", "error_bound",
                "region_count", "planes_count", "elapsed_ms")
SUMMARY_HEADER = ("instance", "value", "bound", "iterations", "ms")
CHECK_TOL = 1e-6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    """Exits with the parse-error code instead of argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


# helpers ----------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v)) if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def trace_csv(rows: list[TraceRow]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in rows:
        w.writerow([r.iteration, _fmt(r.incumbent_value), _fmt(r.upper_bound), _fmt(r.error_bound),
                    r.region_count, r.planes_count, _fmt(r.elapsed_ms)])
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> PipelineConfig:
    return PipelineConfig(
        epsilon=args.epsilon, max_iter=args.max_iter, method=PivotMethod(args.pivot),
        presolve=args.presolve, seed=args.seed, reduce_epsilon=args.reduce_epsilon,
        project=args.project,
    )


def _load(path) -> tuple[str, object]:
    if not path:
        raise CliError("--input is required", EXIT_PARSE)
    return io.read(path)


def _compile(kind: str, model):
    """Bilinear program of a document model."""
    if kind == "bilinear":
        return model
    if kind == "decmdp":
        m, objective = model
        return compile_average_reward(m) if objective == "average" else compile_decmdp(m)
    return compile_game(model)


def _assignment_doc(a: Assignment) -> dict:
    return {k: io.vector_to_doc(getattr(a, k)) for k in ("w", "x", "y", "z")}


def solution_doc(kind: str, model, result) -> dict:
    doc = {
        "kind": "solution",
        "source": kind,
        "value": io.finite(result.value),
        "bound": io.finite(result.bound),
        "iterations": int(result.iterations),
        "kept_dims": int(result.kept_dims),
        "reduction_error": io.finite(result.reduction_error),
        "assignment": _assignment_doc(result.assignment),
    }
    if kind == "decmdp":
        m, objective = model
        pol = extract_policy(m, result.assignment, average_reward=objective == "average")
        doc["policy"] = {"agent1": pol.agent1, "agent2": pol.agent2}
    elif kind == "game":
        doc["residual"] = io.finite(game_residual(result.value))
    return doc


# commands ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    kind, model = _load(args.input)
    p = _compile(kind, model)
    result = run(p, _config(args))
    _emit(io.dumps(solution_doc(kind, model, result)), args.output)
    if args.trace:
        Path(args.trace).write_text(trace_csv(result.trace))
    return EXIT_OK


def cmd_reduce(args) -> int:
    kind, model = _load(args.input)
    p = _compile(kind, model)
    if args.project:
        p = project_objective(p)
    red = reduce(p, args.reduce_epsilon)
    report = {"kept_dims": red.kept_dims, "error_bound": io.finite(red.error_bound),
              "original_dims": p.ny}
    if args.output:
        io.write(args.output, red.reduced_program)
    sys.stdout.write(io.dumps(report))
    return EXIT_OK


def cmd_oracle(args) -> int:
    kind, model = _load(args.input)
    if kind != "decmdp":
        raise CliError("oracle needs a decmdp document", EXIT_PARSE)
    m, objective = model
    if objective != "total":
        raise CliError("oracle supports only total-reward models", EXIT_PARSE)
    value, pol = oracle_enumerate(m)
    report = {"value": value, "policy": {"agent1": pol.agent1, "agent2": pol.agent2}}
    if args.check:
        sol = io.loads(Path(args.check).read_text())
        if not isinstance(sol, dict) or sol.get("kind") != "solution":
            raise CliError(f"{args.check} is not a solution document", EXIT_PARSE)
        solved = sol.get("value")
        bound = sol.get("bound")
        if solved is None or bound is None:
            raise CliError("solution has no finite value or bound", EXIT_CHECK)
        report["solver_value"] = solved
        report["agree"] = abs(value - solved) <= CHECK_TOL + bound
    sys.stdout.write(io.dumps(report))
    if args.check and not report["agree"]:
        return EXIT_CHECK
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.count < 0:
        raise CliError("--count must be nonnegative", EXIT_PARSE)
    if not 0 <= args.shared <= args.sites:
        raise CliError(f"--shared must lie in 0..{args.sites}", EXIT_PARSE)
    out = Path(args.output or "rover_instances")
    out.mkdir(parents=True, exist_ok=True)
    shared = tuple(range(1, args.shared + 1))
    frozen = clock_frozen()
    rows = []
    for i, ss in enumerate(np.random.SeedSequence(args.seed).spawn(args.count)):
        m = generate_rover(args.sites, args.horizon, shared, ss)
        name = f"rover_{i:03d}.json"
        io.write(out / name, m)
        if args.solve:
            start = time.perf_counter()
            result = run(compile_decmdp(m), _config(args))
            ms = 0.0 if frozen else round((time.perf_counter() - start) * 1000.0, 3)
            rows.append((name, _fmt(result.value), _fmt(result.bound), result.iterations, _fmt(ms)))
    if args.solve:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)
        (out / "summary.csv").write_text(buf.getvalue())
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# parser -----------------------------------------------------------------------------


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=1e-4, help="target bound of the solver")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--pivot", choices=[m.value for m in PivotMethod], default=PivotMethod.LINEAR_BOUND.value)
    p.add_argument("--presolve", type=int, default=0, help="iterated best-response restarts")
    p.add_argument("--reduce-epsilon", type=float, default=1e-4)
    p.add_argument("--project", action="store_true", help="project C onto the constraint null spaces")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bilinplan", description="Separable bilinear program solver.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve a bilinear, decmdp or game document")
    s.add_argument("--input", required=True)
    s.add_argument("--output")
    s.add_argument("--trace", help="write the convergence trace as CSV")
    _solver_flags(s)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("reduce", help="reduce the dimensionality of the bilinear term")
    r.add_argument("--input", required=True)
    r.add_argument("--output")
    r.add_argument("--reduce-epsilon", type=float, default=1e-4)
    r.add_argument("--project", action="store_true")
    r.set_defaults(func=cmd_reduce)

    o = sub.add_parser("oracle", help="exhaustive joint-policy search for small decmdps")
    o.add_argument("--input", required=True)
    o.add_argument("--check", help="solution document to compare against")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("benchmark", help="generate benchmark instances")
    b.add_argument("family", choices=["rover"])
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--shared", type=int, default=0, help="number of shared sites, counted from site 1")
    b.add_argument("--sites", type=int, default=6)
    b.add_argument("--horizon", type=int, default=15)
    b.add_argument("--output", help="directory for instances and summary.csv")
    b.add_argument("--solve", action="store_true", help="also solve each instance")
    _solver_flags(b)
    b.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (XInfeasible, XUnbounded, YInfeasible, YUnbounded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (io.DocumentError, InvalidModel, DimensionMismatch, RankDeficientRows, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (BilinearError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

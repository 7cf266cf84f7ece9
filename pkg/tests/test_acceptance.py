"""End-to-end acceptance checks, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linprog

from bilinplan.bilinear import (
    BilinearProgram,
    best_response,
    best_response_value,
    to_semi_compact,
    transpose,
)
from bilinplan.lp import LpProblem, solve_lp
from bilinplan.models import (
    compile_decmdp,
    compile_game,
    example4,
    generate_rover,
    normal_form_game,
    oracle_enumerate,
    strategies,
)
from bilinplan.pipeline import PipelineConfig, run
from bilinplan.reduction import project_lp_objective, project_objective, reduce
from bilinplan.solver import PivotMethod, barycentric, grid_approximation, offline_bound, split_simplex

from helpers import (
    EXAMPLE4_ROWS1,
    EXAMPLE4_ROWS2,
    bilinear_oracle,
    example23,
    random_decmdp,
    random_program,
    random_semi_compact,
    rows_as_text,
)

FIXTURES = Path(__file__).parent / "fixtures"


def test_criterion_01_oracle_equivalence():
    run(compile_decmdp(example4()))  # compile kernels outside the timed region
    config = PipelineConfig(epsilon=1e-6)
    for ss in np.random.SeedSequence(7).spawn(50):
        m = random_decmdp(np.random.default_rng(ss))
        start = time.perf_counter()
        r = run(compile_decmdp(m), config)
        elapsed = time.perf_counter() - start
        assert abs(r.value - oracle_enumerate(m)[0]) <= 1e-6 + r.bound
        assert elapsed < 2.0


def test_criterion_02_example4_fixture():
    m = example4()
    p = compile_decmdp(m)
    assert rows_as_text(p.A1, p.b1, m.agent1.variable_labels("x")) == EXAMPLE4_ROWS1
    assert rows_as_text(p.A2, p.b2, m.agent2.variable_labels("y")) == EXAMPLE4_ROWS2
    r = run(p, PipelineConfig(epsilon=1e-6))
    assert r.value == pytest.approx(oracle_enumerate(m)[0], abs=1e-6 + r.bound)


@pytest.mark.parametrize("shared", [1, 2, 3, 4, 5])
def test_criterion_03_rover_dimensionality(shared):
    p = compile_decmdp(generate_rover(shared_sites=tuple(range(1, shared + 1))))
    assert p.ny == 180
    red = reduce(p, 1e-4)
    assert red.kept_dims == shared
    assert to_semi_compact(red.reduced_program).ny == shared + 1


def test_criterion_04_anytime_certificate():
    config = PipelineConfig(epsilon=1e-4, max_iter=200, method=PivotMethod.LINEAR_BOUND)
    for seed in range(20):
        p = compile_decmdp(generate_rover(horizon=10, shared_sites=(1, 2, 3), seed=seed))
        start = time.perf_counter()
        r = run(p, config)
        elapsed = time.perf_counter() - start
        final = r.solver_value
        for row in r.trace:
            assert row.incumbent_value <= row.upper_bound + 1e-9
            assert row.incumbent_value + row.error_bound >= final - 1e-9
        bounds = [row.error_bound for row in r.trace]
        assert all(b <= a for a, b in zip(bounds, bounds[1:]))
        assert r.bound < 1e-4 and r.iterations <= 200 and elapsed < 60.0


def test_criterion_05_convexity():
    rng = np.random.default_rng(2024)
    violations = 0
    for _ in range(20):
        p = random_semi_compact(rng)
        g = lambda y: best_response(p, y)[1]  # noqa: E731
        for _ in range(50):
            y1, y2 = rng.uniform(-2, 2, p.ny), rng.uniform(-2, 2, p.ny)
            if g(0.5 * (y1 + y2)) > 0.5 * (g(y1) + g(y2)) + 1e-7:
                violations += 1
    assert violations == 0
    q = example23()
    g1, g2, g3 = (best_response_value(q, y) for y in (1.0, 2.0, 3.0))
    assert (g1, g2, g3) == pytest.approx((0.0, 1.0, 0.0), abs=1e-9)
    assert g2 - 0.5 * (g1 + g3) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_criterion_06_triangulation(dim):
    rng = np.random.default_rng(dim)
    T = np.hstack([np.zeros((dim, 1)), np.eye(dim)])
    facet = np.r_[0.0, rng.dirichlet(np.ones(dim))]
    inner = rng.dirichlet(np.ones(dim + 1))
    parents = [(T, T @ inner), (T, T @ facet)]
    child = split_simplex(T, T @ inner)[0]
    parents.append((child, child @ rng.dirichlet(np.ones(dim + 1))))
    for S, pivot in parents:
        kids = split_simplex(S, pivot)
        pts = S @ rng.dirichlet(np.ones(dim + 1), 10_000).T
        bary = np.stack([np.array([barycentric(K, q) for q in pts.T]).min(axis=1) for K in kids])
        assert np.all((bary >= -1e-12).any(axis=0))
        assert np.all((bary > 1e-9).sum(axis=0) == 1)


def test_criterion_07_reduction_bound():
    rng = np.random.default_rng(77)
    for i in range(30):
        p = random_program(rng, nx=3, ny=3, nw=1, nz=1)
        U, s, Vt = np.linalg.svd(p.C)
        s[-1] *= rng.uniform(0.001, 0.3)
        p = p.replace(C=U @ np.diag(s) @ Vt)
        eps = (1e-3, 0.05, 0.5)[i % 3]
        res = reduce(p, eps, scale="auto")
        q = res.reduced_program
        reduced = bilinear_oracle(transpose(q)) if res.changed else bilinear_oracle(q)
        assert abs(bilinear_oracle(p) - reduced) <= res.error_bound + 1e-7


def test_criterion_08_projection():
    rng = np.random.default_rng(8)
    for _ in range(20):
        m, n = 3, 7
        A = rng.uniform(-1, 1, (m, n))
        A[0] = 1.0
        b = A @ rng.uniform(0.1, 1, n)
        c = rng.uniform(-1, 1, n)
        ct, shift = project_lp_objective(c, A, b)
        assert shift == pytest.approx(float(c @ A.T @ np.linalg.solve(A @ A.T, b)), abs=1e-7)
        s0, s1 = solve_lp(LpProblem(c, A, b)), solve_lp(LpProblem(ct, A, b))
        np.testing.assert_allclose(s0.x, s1.x, atol=1e-7)
        assert s0.objective - s1.objective == pytest.approx(shift, abs=1e-7)
    payoffs = [np.array([[1.0, -1.0], [-1.0, 1.0]])] + [rng.uniform(-1, 1, (2, 2)) for _ in range(5)]
    for P in payoffs:
        g = normal_form_game(P, -P)
        assert reduce(project_objective(compile_game(g)), 1e-4).kept_dims == 0
        r = run(compile_game(g), PipelineConfig(epsilon=1e-8, project=True))
        assert r.value == pytest.approx(0.0, abs=1e-7)
        x, y = strategies(g, r.assignment)
        # minimax value of the row player: max v s.t. Pᵀx ≥ v, 1ᵀx = 1
        lp = linprog([0, 0, -1], A_ub=np.c_[-P.T, np.ones(2)], b_ub=[0, 0],
                     A_eq=[[1, 1, 0]], b_eq=[1], bounds=[(0, None), (0, None), (None, None)])
        assert x @ P @ y == pytest.approx(-lp.fun, abs=1e-7)


def test_criterion_09_method_dominance():
    def iterations(r, threshold=1e-3):
        return next((row.iteration for row in r.trace if row.error_bound < threshold), math.inf)

    order = [PivotMethod.CUTTING_PLANE, PivotMethod.LINEAR_BOUND, PivotMethod.FEASIBLE, PivotMethod.BASIC]
    hits = 0
    for seed in range(10):
        p = compile_decmdp(generate_rover(horizon=10, shared_sites=(1, 2, 3), seed=seed))
        its = [iterations(run(p, PipelineConfig(method=m))) for m in order]
        hits += all(a <= b for a, b in zip(its, its[1:]))
    assert hits >= 8


def test_criterion_10_offline_bound():
    assert offline_bound(1.0, 1, 0.1) == 10
    assert offline_bound(1.0, 2, 0.5) == 2
    rng = np.random.default_rng(10)
    p = BilinearProgram(A1=np.ones((1, 3)), B1=None, b1=[1], A2=[[1.0]], B2=None, b2=[1.0],
                        r1=rng.uniform(-1, 1, 3), s1=None, r2=[0.0], s2=None,
                        C=rng.uniform(-1, 1, (3, 1)), sense2="le")
    norm = float(np.linalg.norm(p.C, 2))
    planes, delta = grid_approximation(p, offline_bound(norm, 1, 0.1))
    worst = max(best_response(p, [y])[1] - max(pl.value([y]) for pl in planes)
                for y in np.linspace(0, 1, 201))
    assert worst <= norm * delta + 1e-12


def _cli(args, cwd):
    env = dict(os.environ, BILINPLAN_FREEZE_CLOCK="1")
    out = subprocess.run([sys.executable, "-m", "bilinplan.cli", *map(str, args)],
                         cwd=cwd, env=env, capture_output=True)
    return out.returncode, out.stdout


def test_criterion_11_determinism(tmp_path):
    runs = []
    for d in ("a", "b"):
        work = tmp_path / d
        work.mkdir()
        outputs = [
            _cli(["solve", "--input", FIXTURES / "example4.json", "--seed", 3, "--presolve", 4,
                  "--output", "s.json", "--trace", "t.csv"], work),
            _cli(["solve", "--input", FIXTURES / "small_bilinear.json", "--pivot", "cutting-plane",
                  "--epsilon", 1e-6, "--output", "b.json", "--trace", "bt.csv"], work),
            _cli(["reduce", "--input", FIXTURES / "matching_pennies.json", "--project",
                  "--output", "r.json"], work),
            _cli(["oracle", "--input", FIXTURES / "example4.json", "--check", "s.json"], work),
            _cli(["benchmark", "rover", "--count", 2, "--shared", 2, "--horizon", 8, "--seed", 11,
                  "--output", "bench", "--solve"], work),
        ]
        files = {str(f.relative_to(work)): f.read_bytes() for f in sorted(work.rglob("*")) if f.is_file()}
        runs.append((outputs, files))
    assert all(rc == 0 for rc, _ in runs[0][0])
    assert runs[0] == runs[1]
    assert len(runs[0][1]) == 8

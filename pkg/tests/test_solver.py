import math

import numpy as np
import pytest

from bilinplan.bilinear import BilinearProgram, best_response, to_semi_compact
from bilinplan.models import compile_decmdp, example4, oracle_enumerate
from bilinplan.solver import (
    PivotMethod,
    SimplexRegion,
    SolverConfig,
    _Approximation,
    barycentric,
    edge_crossing,
    fit_hyperplane,
    grid_approximation,
    in_complement_set,
    initial_simplex,
    iterative_best_response,
    offline_bound,
    polyhedron_cut,
    polyhedron_error,
    push_interior,
    refine,
    solve,
    split_simplex,
    y_box,
)

from helpers import bilinear_oracle, random_program

METHODS = list(PivotMethod)


def simplex_program(n=2):
    """x and y both on the probability simplex, C = I: g(y) = max_i y_i."""
    return BilinearProgram(A1=np.ones((1, n)), B1=None, b1=[1], A2=np.ones((1, n)), B2=None, b2=[1],
                           r1=None, s1=None, r2=None, s2=None, C=np.eye(n))


def abs_program():
    """g(y) = |y − 1| over y ∈ [0, 2]."""
    return BilinearProgram(A1=[[1.0], [-1.0]], B1=np.zeros((2, 0)), b1=[1, 1],
                           A2=[[1.0]], B2=np.zeros((1, 0)), b2=[2.0],
                           r1=[-1.0], s1=[], r2=[0.0], s2=[], C=[[1.0]],
                           sense1="le", sense2="le", x_free=[True])


def region_for(p, T, method=PivotMethod.BASIC):
    state = _Approximation(p, method)
    return state, state.make_region(np.asarray(T, float))


# geometry ----------------------------------------------------------------------


def test_split_two_dimensional_simplex():
    T = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    y = np.array([1 / 3, 1 / 3])
    kids = split_simplex(T, y)
    expected = [
        [[1 / 3, 1 / 3], [1, 0], [0, 1]],
        [[0, 0], [1 / 3, 1 / 3], [0, 1]],
        [[0, 0], [1, 0], [1 / 3, 1 / 3]],
    ]
    assert len(kids) == 3
    for K, E in zip(kids, expected):
        np.testing.assert_allclose(K.T, E)


def test_split_drops_degenerate_children():
    T = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    kids = split_simplex(T, np.array([0.5, 0.0]))  # on the edge opposite vertex 3
    assert len(kids) == 2


def test_push_interior():
    T = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    y = push_interior(T, np.array([1.0, 0.0, 0.0]))
    assert barycentric(T, y).min() > 1e-7
    np.testing.assert_allclose(push_interior(T, np.array([0.2, 0.3, 0.5])), T @ [0.2, 0.3, 0.5])


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_refinement_covers_without_overlap(dim, rng):
    T = np.hstack([np.zeros((dim, 1)), np.eye(dim)])
    pivot = T @ rng.dirichlet(np.ones(dim + 1))
    kids = split_simplex(T, pivot)
    pts = T @ rng.dirichlet(np.ones(dim + 1), 10_000).T
    bary = [np.array([barycentric(K, p) for p in pts.T]) for K in kids]
    inside = np.stack([b.min(axis=1) >= -1e-12 for b in bary])
    assert inside.any(axis=0).all()
    interior = np.stack([b.min(axis=1) > 1e-9 for b in bary])
    assert np.all(interior.sum(axis=0) <= 1)


# initial simplex -------------------------------------------------------------


def test_initial_simplex_contains_probability_simplex():
    T = initial_simplex(simplex_program(2))
    for v in ([0, 0], [1, 0], [0, 1]):
        assert barycentric(T, v).min() >= 0
    assert T.max() >= 1


def test_initial_simplex_single_point():
    p = BilinearProgram(A1=[[1]], B1=None, b1=[1], A2=[[1]], B2=None, b2=[1],
                        r1=None, s1=None, r2=None, s2=None, C=[[1]])
    T = initial_simplex(p)
    assert barycentric(T, [1.0]).min() > 0


@pytest.mark.parametrize("seed", range(5))
def test_initial_simplex_contains_random_y_vertices(seed):
    rng = np.random.default_rng(seed)
    p = to_semi_compact(random_program(rng, ny=3, nz=2, m2=2))
    T = initial_simplex(p)
    for _ in range(30):
        sol = p.side2_lp(rng.standard_normal(p.ny), rng.standard_normal(p.nz))
        assert barycentric(T, sol.x[: p.ny]).min() >= -1e-12


def test_y_box_unbounded():
    from bilinplan.errors import YUnbounded

    p = BilinearProgram(A1=[[1]], B1=None, b1=[1], A2=[[1, -1]], B2=None, b2=[0],
                        r1=None, s1=None, r2=None, s2=None, C=[[1, 1]])
    with pytest.raises(YUnbounded):
        y_box(p)


# polyhedron error -------------------------------------------------------------------


def test_linear_g_has_zero_error():
    p = BilinearProgram(A1=[[1, 1]], B1=None, b1=[1], A2=[[1, 1]], B2=None, b2=[1],
                        r1=None, s1=None, r2=None, s2=None, C=[[1, 2], [1, 2]])
    state, reg = region_for(p, [[0, 1, 0], [0, 0, 1]])
    eps, _ = polyhedron_error(p, state.planes, reg, PivotMethod.BASIC, -math.inf)
    assert eps == pytest.approx(0, abs=1e-12)


def test_one_dimensional_kink_error():
    # planes at 0 and 2 are 1 − y and y − 1; u ≡ 1 and the gap peaks at y = 1
    p = abs_program()
    state, reg = region_for(p, [[0.0, 2.0]])
    eps, phi = polyhedron_error(p, state.planes, reg, PivotMethod.BASIC, -math.inf)
    assert eps == pytest.approx(1.0)
    assert phi[0] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(8))
def test_method_dominance_on_same_region(seed):
    rng = np.random.default_rng(seed)
    p = to_semi_compact(random_program(rng, ny=2, nz=1))
    state, reg = region_for(p, initial_simplex(p))
    h = float(np.quantile(reg.vertex_g, 0.5)) - p.constant
    err = {}
    for m in METHODS:
        cut = polyhedron_cut(p, reg, h) if m is PivotMethod.CUTTING_PLANE else None
        err[m] = polyhedron_error(p, state.planes, reg, m, h, cut)[0]
    tol = 1e-9
    assert err[PivotMethod.FEASIBLE] <= err[PivotMethod.BASIC] + tol
    assert err[PivotMethod.LINEAR_BOUND] <= err[PivotMethod.BASIC] + tol
    assert err[PivotMethod.LINEAR_BOUND] <= err[PivotMethod.FEASIBLE] + tol
    assert err[PivotMethod.CUTTING_PLANE] <= err[PivotMethod.LINEAR_BOUND] + tol


def test_infeasible_error_lp_returns_centroid():
    p = abs_program()
    state, reg = region_for(p, [[0.0, 2.0]])
    eps, phi = polyhedron_error(p, state.planes, reg, PivotMethod.LINEAR_BOUND, 5.0)
    assert eps == 0.0
    np.testing.assert_allclose(phi, reg.centroid())


# cuts ----------------------------------------------------------------------------


def test_membership_and_edge_crossing():
    p = simplex_program(2)
    assert in_complement_set(p, [0.3, 0.2], 0.5)
    assert not in_complement_set(p, [0.6, 0.2], 0.5)
    beta = edge_crossing(p, [0.0, 0.0], [1.0, 0.0], 0.5)
    assert beta == pytest.approx(0.5)
    assert edge_crossing(p, [0.0, 0.0], [0.2, 0.0], 0.5) == pytest.approx(1.0)


def test_cut_through_two_edge_points():
    p = simplex_program(2)
    _, reg = region_for(p, [[0, 1, 0], [0, 0, 1]])
    cut = polyhedron_cut(p, reg, 0.5)
    assert cut is not None
    sigma, tau = cut
    np.testing.assert_allclose(sigma, [-0.5, -0.5])
    assert tau == pytest.approx(-0.25)


def test_no_cut_cases():
    p = simplex_program(2)
    _, reg = region_for(p, [[0, 1, 0], [0, 0, 1]])
    assert polyhedron_cut(p, reg, -math.inf) is None
    assert polyhedron_cut(p, reg, 5.0) is None  # every vertex below h


def test_fit_hyperplane_normalizations():
    sigma, tau = fit_hyperplane(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert sigma.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(sigma @ np.eye(2), [tau, tau])
    # points on a line through the origin with 1ᵀσ = 0: unit-norm fallback
    sigma, tau = fit_hyperplane(np.array([[1.0, 2.0], [1.0, 2.0]]))
    assert np.linalg.norm(sigma) == pytest.approx(1.0)
    assert tau == pytest.approx(0.0, abs=1e-12)


# refine -----------------------------------------------------------------------------


def test_refine_clamps_child_errors(rng):
    p = to_semi_compact(random_program(rng, ny=2, nz=1))
    state, reg = region_for(p, initial_simplex(p))
    state.evaluate(reg)
    n_planes = len(state.planes)
    kids = refine(state, reg)
    assert 1 <= len(kids) <= p.ny + 1
    assert all(k.error_bound <= 1e300 and k.error_bound >= 0 for k in kids)
    assert reg.error_bound == 0.0 and not reg.active
    assert len(state.planes) == n_planes + 1


# iterative best response ----------------------------------------------------------


def test_ibr_uncoupled():
    p = BilinearProgram(A1=[[1, 1]], B1=None, b1=[1], A2=[[1, 1]], B2=None, b2=[1],
                        r1=[1, 2], s1=None, r2=[3, 1], s2=None, C=np.zeros((2, 2)))
    a, v = iterative_best_response(p, seed=1)
    assert v == pytest.approx(5.0)
    np.testing.assert_allclose(a.x, [0, 1])
    np.testing.assert_allclose(a.y, [1, 0])


def test_ibr_example4_lower_bound():
    m = example4()
    _, v = iterative_best_response(compile_decmdp(m), seed=0)
    assert v <= oracle_enumerate(m)[0] + 1e-9


def test_ibr_deterministic(rng):
    p = random_program(rng)
    a1, v1 = iterative_best_response(p, seed=7)
    a2, v2 = iterative_best_response(p, seed=7)
    assert v1 == v2 and a1.x.tobytes() == a2.x.tobytes()


# solve ------------------------------------------------------------------------------


def test_linear_program_solved_immediately():
    p = BilinearProgram(A1=[[1, 1]], B1=None, b1=[1], A2=[[1, 1]], B2=None, b2=[1],
                        r1=[1, 2], s1=None, r2=[3, 1], s2=None, C=np.zeros((2, 2)))
    r = solve(p, SolverConfig(epsilon=1e-9))
    assert r.value == pytest.approx(5.0)
    assert r.bound == pytest.approx(0.0, abs=1e-12) and r.iterations == 0


@pytest.mark.parametrize("method", METHODS)
def test_example4_solved(method):
    m = example4()
    r = solve(compile_decmdp(m), SolverConfig(epsilon=1e-6, method=method, max_iter=400))
    assert r.value == pytest.approx(oracle_enumerate(m)[0], abs=1e-6 + r.bound)


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("seed", range(6))
def test_anytime_soundness(method, seed):
    rng = np.random.default_rng(100 + seed)
    p = random_program(rng, nx=3, ny=2, nw=1, nz=1)
    opt = bilinear_oracle(p)
    r = solve(p, SolverConfig(epsilon=1e-7, method=method, max_iter=60))
    tol = 1e-7
    for row in r.trace:
        assert row.incumbent_value <= opt + tol
        assert opt <= row.upper_bound + tol
    bounds = [row.error_bound for row in r.trace]
    assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(bounds, bounds[1:]))
    assert r.value == pytest.approx(r.trace[-1].incumbent_value)


@pytest.mark.parametrize("method", [PivotMethod.LINEAR_BOUND, PivotMethod.CUTTING_PLANE])
def test_pruning_never_loses_optimum(method):
    bad = 0
    for seed in range(100):
        rng = np.random.default_rng(10_000 + seed)
        p = random_program(rng, nx=2, ny=2, nw=1, nz=1, m1=1, m2=1)
        opt = bilinear_oracle(p)
        r = solve(p, SolverConfig(epsilon=1e-7, method=method, max_iter=40))
        bad += opt > r.value + r.bound + 1e-7
    assert bad == 0


def test_presolve_seeds_incumbent(rng):
    p = random_program(rng)
    r0 = solve(p, SolverConfig(max_iter=0))
    r5 = solve(p, SolverConfig(max_iter=0, presolve=5))
    assert r5.trace[0].incumbent_value >= r0.trace[0].incumbent_value - 1e-12


def test_trace_determinism(rng):
    p = random_program(rng)
    cfg = SolverConfig(epsilon=1e-7, max_iter=30, presolve=3, seed=4)
    a, b = solve(p, cfg), solve(p, cfg)
    assert a.trace == b.trace


# offline bound ----------------------------------------------------------------------


def test_offline_bound_examples():
    assert offline_bound(1.0, 1, 0.1) == 10
    assert offline_bound(1.0, 2, 0.5) == 2
    assert offline_bound(1.0, 2, 100.0) == 1
    assert offline_bound(np.eye(3), 3, 1e-2) ** 3 >= math.sqrt(27) / 1e-2


def test_offline_bound_rejects_bad_input():
    with pytest.raises(ValueError):
        offline_bound(1.0, 1, 0.0)


def test_grid_error_within_lemma_bound(rng):
    p = BilinearProgram(A1=np.ones((1, 3)), B1=None, b1=[1], A2=[[1.0]], B2=None, b2=[1.0],
                        r1=rng.uniform(-1, 1, 3), s1=None, r2=[0.0], s2=None,
                        C=rng.uniform(-1, 1, (3, 1)), sense2="le")
    norm = float(np.linalg.norm(p.C, 2))
    k = offline_bound(norm, 1, 0.1)
    planes, delta = grid_approximation(p, k)
    for y in np.linspace(0, 1, 101):
        g = best_response(p, [y])[1]
        approx = max(pl.value([y]) for pl in planes)
        assert g - approx <= norm * delta + 1e-12

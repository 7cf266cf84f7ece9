"""Successive approximation of the best-response function over a triangulation.

The feasible set Y of the second side is covered by a simplex which is split
repeatedly at pivot points. Each split evaluates one more best response of the
first side, and every simplex carries an upper bound on how much the true
best-response function g can exceed the current lower approximation inside
it. The largest of those bounds certifies the incumbent.
"""

from __future__ import annotations

import heapq
import itertools
import math
import os
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bilinear import (
    EQ,
    Assignment,
    BilinearProgram,
    ResponsePlane,
    best_response,
    best_y_for_plane,
    split_normal_form,
    split_semi_compact,
    to_semi_compact,
)
from .errors import SingularMatrix, XInfeasible, YInfeasible, YUnbounded
from .linalg import complete_basis, lu_factor, spectral_norm, svd
from .lp import LpProblem, LpStatus, solve_lp

CLOCK_ENV = "BILINPLAN_FREEZE_CLOCK"
INTERIOR_TOL = 1e-7


class PivotMethod(str, Enum):
    BASIC = "basic"
    FEASIBLE = "feasible"
    LINEAR_BOUND = "linear-bound"
    CUTTING_PLANE = "cutting-plane"

    @property
    def uses_feasibility(self) -> bool:
        return self is not PivotMethod.BASIC

    @property
    def uses_bound(self) -> bool:
        return self in (PivotMethod.LINEAR_BOUND, PivotMethod.CUTTING_PLANE)


@dataclass
class SimplexRegion:
    """One simplex of the triangulation. ``T`` holds the vertices as columns."""

    T: np.ndarray
    vertex_g: np.ndarray
    vertex_planes: list[int]
    error_bound: float = math.inf
    pivot: np.ndarray | None = None
    active: bool = True
    h_seen: float = -math.inf
    cut: tuple[np.ndarray, float] | None = None

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    @property
    def vertices(self) -> np.ndarray:
        return self.T.T

    def centroid(self) -> np.ndarray:
        return self.T.mean(axis=1)


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    incumbent_value: float
    upper_bound: float
    error_bound: float
    region_count: int
    planes_count: int
    elapsed_ms: float


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-4
    max_iter: int = 200
    method: PivotMethod = PivotMethod.LINEAR_BOUND
    presolve: int = 0
    seed: int = 0


@dataclass
class SolveResult:
    assignment: Assignment
    value: float
    bound: float
    iterations: int
    trace: list[TraceRow] = field(default_factory=list)
    planes_count: int = 0

    @property
    def converged(self) -> bool:
        return self.bound < math.inf


# geometry ---------------------------------------------------------------------


def augmented(T: np.ndarray) -> np.ndarray:
    """T̂ = [T; 1ᵀ]."""
    return np.vstack([T, np.ones((1, T.shape[1]))])


def barycentric(T: np.ndarray, y) -> np.ndarray:
    """Barycentric coordinates of ``y`` with respect to the columns of ``T``."""
    rhs = np.append(np.asarray(y, dtype=float), 1.0)
    return lu_factor(augmented(T)).solve(rhs)


def split_simplex(T: np.ndarray, y) -> list[np.ndarray]:
    """Children obtained by replacing each vertex in turn with ``y``.

    Children whose vertex matrix is singular (``y`` on the opposite face) are
    dropped.
    """
    children = []
    for k in range(T.shape[1]):
        child = T.copy()
        child[:, k] = y
        try:
            lu_factor(augmented(child))
        except SingularMatrix:
            continue
        children.append(child)
    return children


def push_interior(T: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Pivot from barycentric weights ``t``, moved inside when on a face."""
    n1 = T.shape[1]
    t = np.clip(t, 0.0, None)
    s = t.sum()
    t = t / s if s > 0 else np.full(n1, 1.0 / n1)
    if t.min() < INTERIOR_TOL:
        t = 0.9 * t + 0.1 / n1
        if t.min() < INTERIOR_TOL:
            t = np.full(n1, 1.0 / n1)
    return T @ t


# initial simplex -------------------------------------------------------------------


def y_box(p: BilinearProgram) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate [min, max] of y over Y from 2|y| LPs."""
    lo = np.empty(p.ny)
    hi = np.empty(p.ny)
    for i in range(p.ny):
        for sign, out in ((1.0, hi), (-1.0, lo)):
            cy = np.zeros(p.ny)
            cy[i] = sign
            sol = p.side2_lp(cy, np.zeros(p.nz))
            if sol.status is LpStatus.INFEASIBLE:
                raise YInfeasible("side-2 constraints have no feasible point")
            if not sol.optimal:
                raise YUnbounded(f"y[{i}] is unbounded over Y")
            out[i] = sign * sol.objective
    return lo, hi


def initial_simplex(p: BilinearProgram) -> np.ndarray:
    """Vertex matrix of a simplex that contains Y.

    The per-coordinate box of Y is inflated by 1% and enclosed in the simplex
    with vertices ℓ and ℓ + n(uᵢ − ℓᵢ)eᵢ.
    """
    lo, hi = y_box(p)
    n = p.ny
    width = hi - lo
    pad = 0.01 * width + 1e-6 * (1.0 + np.abs(lo) + np.abs(hi))
    lo = lo - pad
    hi = hi + pad
    T = np.tile(lo[:, None], (1, n + 1))
    for i in range(n):
        T[i, i + 1] += n * (hi[i] - lo[i])
    return T


# membership and cuts ---------------------------------------------------------


def _dual_rows(p: BilinearProgram, y0: np.ndarray, d: np.ndarray | None):
    """Constraint rows of the side-1 dual system at y = y0 + β d.

    Variables are (λ, β) with λ free for equality sides and λ ≥ 0 otherwise.
    Returns (G, h, A, b) for inequality and equality rows, in that order.
    """
    m = p.b1.size
    cy = p.C @ y0 + p.r1
    cd = np.zeros(p.nx) if d is None else p.C @ d
    # A₁ᵀλ ≥ r₁ + C(y0 + βd): ≤-rows for sign-constrained x, = rows for free x
    rows_x = np.hstack([-p.A1.T, cd[:, None]])
    free = p.x_free
    G = [rows_x[~free], np.hstack([-p.B1.T, np.zeros((p.nw, 1))])]
    h = [-cy[~free], -p.s1]
    A = rows_x[free]
    b = -cy[free]
    return G, h, A, b, m


def in_complement_set(p: BilinearProgram, y, h: float) -> bool:
    """True when g(y) ≤ h, decided by feasibility of the side-1 dual system."""
    y = np.asarray(y, dtype=float)
    G, hh, A, b, m = _dual_rows(p, y, None)
    G = [g[:, :m] for g in G]
    G.append(p.b1[None, :])
    hh.append(np.array([h - p.r2 @ y]))
    free = tuple(range(m)) if p.sense1 == EQ else ()
    sol = solve_lp(LpProblem(np.zeros(m), A[:, :m], b, np.vstack(G), np.concatenate(hh), "max", free))
    return sol.optimal


def edge_crossing(p: BilinearProgram, y_in, y_out, h: float) -> float | None:
    """Largest β ∈ [0, 1] with g(y_in + β(y_out − y_in)) ≤ h, or None."""
    y_in = np.asarray(y_in, dtype=float)
    d = np.asarray(y_out, dtype=float) - y_in
    G, hh, A, b, m = _dual_rows(p, y_in, d)
    G.append(np.append(p.b1, p.r2 @ d)[None, :])
    hh.append(np.array([h - p.r2 @ y_in]))
    beta_row = np.zeros((1, m + 1))
    beta_row[0, m] = 1.0
    G.append(beta_row)
    hh.append(np.array([1.0]))
    c = np.zeros(m + 1)
    c[m] = 1.0
    free = tuple(range(m)) if p.sense1 == EQ else ()
    sol = solve_lp(LpProblem(c, A, b, np.vstack(G), np.concatenate(hh), "max", free))
    if not sol.optimal:
        return None
    return float(min(max(sol.x[m], 0.0), 1.0))


def fit_hyperplane(F: np.ndarray) -> tuple[np.ndarray, float] | None:
    """σ, τ with σᵀf = τ for every column f of ``F`` (n × n).

    Normalized by 1ᵀσ = 1 when possible, otherwise by ‖σ‖ = 1.
    """
    n = F.shape[0]
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = F.T
    M[:n, n] = -1.0
    M[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    try:
        sol = lu_factor(M).solve(rhs)
        sigma, tau = sol[:n], float(sol[n])
        if np.all(np.isfinite(sol)):
            return sigma, tau
    except SingularMatrix:
        pass
    K = np.hstack([F.T, -np.ones((n, 1))])
    _, s, vt = svd(K)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    if np.count_nonzero(s > 1e-10 * scale) < n:
        return None
    null = complete_basis(vt.T, n + 1)[:, n]
    sigma, tau = null[:n], float(null[n])
    norm = np.linalg.norm(sigma)
    if norm < 1e-12:
        return None
    return sigma / norm, tau / norm


def polyhedron_cut(p: BilinearProgram, region: SimplexRegion, h: float, crossing=None):
    """Half-space σᵀy ≤ τ that keeps every point of the region with g ≥ h.

    ``crossing(y_in, y_out)`` replaces ``edge_crossing`` at this h, which lets
    callers cache edges shared between neighbouring regions. Returns None
    when no valid cut is found.
    """
    if crossing is None:
        crossing = lambda a, b: edge_crossing(p, a, b, h)  # noqa: E731
    if not math.isfinite(h):
        return None
    n = region.dim
    tol = 1e-9 * (1.0 + abs(h))
    g = region.vertex_g
    inside = [k for k in range(n + 1) if g[k] < h - tol]
    outside = [k for k in range(n + 1) if k not in inside]
    if not inside or not outside:
        return None
    V = region.T
    crossings = {}
    points = []
    for i in outside:
        for j in inside:
            beta = crossing(V[:, j], V[:, i])
            if beta is None:
                return None
            crossings[(j, i)] = beta
            points.append(V[:, j] + beta * (V[:, i] - V[:, j]))
    if len(points) < n:
        return None
    fit = fit_hyperplane(np.column_stack(points[:n]))
    if fit is None:
        return None
    sigma, tau = fit
    scale = 1e-9 * (1.0 + np.max(np.abs(V)) * np.sum(np.abs(sigma)) + abs(tau))
    if any(sigma @ V[:, i] > tau + scale for i in outside):
        sigma, tau = -sigma, -tau
    if any(sigma @ V[:, i] > tau + scale for i in outside):
        return None
    # the removed piece is the hull of the cut-side inside vertices and the
    # points where the hyperplane meets the edges; each must have g ≤ h
    for (j, i), beta in crossings.items():
        side_j = sigma @ V[:, j] - tau
        if side_j <= scale:
            continue
        side_i = sigma @ V[:, i] - tau
        denom = side_j - side_i
        if denom <= 0:
            return None
        beta_c = side_j / denom
        if beta_c > beta + 1e-9:
            return None
    return sigma, tau


# polyhedron error ----------------------------------------------------------


def polyhedron_error(
    p: BilinearProgram,
    planes: list[ResponsePlane],
    region: SimplexRegion,
    method: PivotMethod,
    h: float,
    cut: tuple[np.ndarray, float] | None = None,
) -> tuple[float, np.ndarray]:
    """Upper bound on g − l over the region's search set and the pivot there.

    ``l`` is the maximum of the response planes of the region's vertices. The
    search set is the simplex (basic), its intersection with Y (feasible),
    further restricted to u ≥ h (linear-bound) and to ``cut`` when given.
    """
    T = region.T
    n1 = T.shape[1]
    g = region.vertex_g
    L = [planes[j] for j in dict.fromkeys(region.vertex_planes)]
    # D[j, k] = g(y_k) − plane_j(y_k) ≥ 0
    D = np.array([g - (pl.offset + pl.slope @ T) for pl in L])
    D = np.maximum(D, 0.0)
    nz = p.nz if method.uses_feasibility else 0
    nvar = 1 + n1 + nz
    c = np.zeros(nvar)
    c[0] = 1.0
    G_rows = [np.hstack([np.ones((len(L), 1)), -D, np.zeros((len(L), nz))])]
    h_rows = [np.zeros(len(L))]
    A_rows = [np.concatenate([[0.0], np.ones(n1), np.zeros(nz)])[None, :]]
    b_rows = [np.array([1.0])]
    if method.uses_feasibility:
        Y_rows = np.hstack([np.zeros((p.b2.size, 1)), p.A2 @ T, p.B2])
        if p.sense2 == EQ:
            A_rows.append(Y_rows)
            b_rows.append(p.b2)
        else:
            G_rows.append(Y_rows)
            h_rows.append(p.b2)
        fixed = ~p.y_free
        if np.any(fixed):
            G_rows.append(np.hstack([np.zeros((fixed.sum(), 1)), -T[fixed], np.zeros((fixed.sum(), nz))]))
            h_rows.append(np.zeros(fixed.sum()))
    if method.uses_bound and math.isfinite(h):
        G_rows.append(np.concatenate([[0.0], -g, np.zeros(nz)])[None, :])
        h_rows.append(np.array([-h]))
    if cut is not None:
        sigma, tau = cut
        G_rows.append(np.concatenate([[0.0], sigma @ T, np.zeros(nz)])[None, :])
        h_rows.append(np.array([tau]))
    sol = solve_lp(LpProblem(c, np.vstack(A_rows), np.concatenate(b_rows),
                             np.vstack(G_rows), np.concatenate(h_rows)))
    if not sol.optimal:
        return 0.0, region.centroid()
    t = sol.x[1:1 + n1]
    return max(float(sol.objective), 0.0), push_interior(T, t)


# iterative best response ---------------------------------------------------------


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def iterative_best_response(
    p: BilinearProgram, seed=0, max_rounds: int = 100
) -> tuple[Assignment, float]:
    """Alternate exact best responses from a random feasible y."""
    rng = make_rng(seed)
    start = p.side2_lp(rng.standard_normal(p.ny), rng.standard_normal(p.nz))
    if start.status is LpStatus.INFEASIBLE:
        raise YInfeasible("side-2 constraints have no feasible point")
    if not start.optimal:
        start = p.side2_lp(np.zeros(p.ny), np.zeros(p.nz))
        if not start.optimal:
            raise YUnbounded("could not find a starting point in Y")
    y, z = start.x[: p.ny], start.x[p.ny:]
    best = None
    for _ in range(max_rounds):
        s1 = p.side1_lp(p.r1 + p.C @ y)
        if s1.status is LpStatus.INFEASIBLE:
            raise XInfeasible("side-1 constraints have no feasible point")
        x, w = s1.x[: p.nx], s1.x[p.nx:]
        s2 = p.side2_lp(p.r2 + p.C.T @ x)
        if not s2.optimal:
            raise YUnbounded("side-2 response is unbounded")
        y_new, z_new = s2.x[: p.ny], s2.x[p.ny:]
        value = float(p.s1 @ w + p.r1 @ x + s2.objective + p.constant)
        a = Assignment(w, x, y_new, z_new)
        improved = best is None or value > best[1] + 1e-12
        if improved:
            best = (a, value)
        change = max(np.max(np.abs(y_new - y), initial=0.0), np.max(np.abs(z_new - z), initial=0.0))
        y, z = y_new, z_new
        if change < 1e-9 or not improved:
            break
    return best


# main loop --------------------------------------------------------------------


def clock_frozen() -> bool:
    """True when timings are pinned to zero for byte-reproducible output."""
    return os.environ.get(CLOCK_ENV, "").strip() not in ("", "0")


class _Clock:
    def __init__(self):
        self.frozen = clock_frozen()
        self.start = time.perf_counter()

    def ms(self) -> float:
        if self.frozen:
            return 0.0
        return round((time.perf_counter() - self.start) * 1000.0, 3)


class _Approximation:
    """Mutable solver state: planes, vertex cache, incumbent and region heap."""

    def __init__(self, p: BilinearProgram, method: PivotMethod):
        self.p = p
        self.method = method
        self.planes: list[ResponsePlane] = []
        self.vertex_cache: dict[bytes, tuple[float, int]] = {}
        self.edge_cache: dict[tuple, float | None] = {}
        self.h = -math.inf
        self.incumbent: Assignment | None = None
        self.heap: list = []
        self.counter = itertools.count()

    def offer(self, a: Assignment, value: float) -> None:
        if value > self.h:
            self.h = value
            self.incumbent = a

    def add_plane(self, plane: ResponsePlane) -> int:
        self.planes.append(plane)
        a, v = best_y_for_plane(self.p, plane)
        self.offer(a, v)
        return len(self.planes) - 1

    def vertex(self, y: np.ndarray) -> tuple[float, int]:
        key = y.tobytes()
        hit = self.vertex_cache.get(key)
        if hit is None:
            plane, g = best_response(self.p, y)
            hit = (g, self.add_plane(plane))
            self.vertex_cache[key] = hit
        return hit

    def crossing(self, y_in: np.ndarray, y_out: np.ndarray) -> float | None:
        key = (y_in.tobytes(), y_out.tobytes(), self.h)
        if key not in self.edge_cache:
            self.edge_cache[key] = edge_crossing(self.p, y_in, y_out, self.level)
        return self.edge_cache[key]

    def make_region(self, T: np.ndarray) -> SimplexRegion:
        info = [self.vertex(T[:, k]) for k in range(T.shape[1])]
        return SimplexRegion(T, np.array([g for g, _ in info]), [j for _, j in info])

    @property
    def level(self) -> float:
        """Incumbent in the units of g, which leaves out the constant."""
        return self.h - self.p.constant

    def evaluate(self, region: SimplexRegion) -> None:
        cut = None
        if self.method is PivotMethod.CUTTING_PLANE:
            cut = polyhedron_cut(self.p, region, self.level, self.crossing)
        eps, phi = polyhedron_error(self.p, self.planes, region, self.method, self.level, cut)
        region.error_bound = min(region.error_bound, eps)
        region.pivot = phi
        region.cut = cut
        region.h_seen = self.h

    def push(self, region: SimplexRegion) -> None:
        heapq.heappush(self.heap, (-region.error_bound, next(self.counter), region))

    @property
    def bound(self) -> float:
        return -self.heap[0][0] if self.heap else 0.0


def refine(state: _Approximation, region: SimplexRegion) -> list[SimplexRegion]:
    """Split ``region`` at its pivot and return the evaluated children."""
    y = region.pivot
    state.vertex(y)
    children = []
    for T in split_simplex(region.T, y):
        child = state.make_region(T)
        child.error_bound = region.error_bound
        state.evaluate(child)
        children.append(child)
    region.error_bound = 0.0
    region.active = False
    return children


def _solve_semi_compact(p: BilinearProgram, config: SolverConfig, start) -> SolveResult:
    method = PivotMethod(config.method)
    clock = _Clock()
    state = _Approximation(p, method)
    if start is not None:
        state.offer(*start)
    trace: list[TraceRow] = []

    def record(it):
        trace.append(TraceRow(it, state.h, state.h + state.bound, state.bound,
                              len(state.heap), len(state.planes), clock.ms()))

    if p.ny == 0:
        plane, _ = best_response(p, np.zeros(0))
        state.add_plane(plane)
        record(0)
        return SolveResult(state.incumbent, state.h, 0.0, 0, trace, len(state.planes))

    root = state.make_region(initial_simplex(p))
    state.evaluate(root)
    state.push(root)
    record(0)
    iterations = 0
    while iterations < config.max_iter and state.heap:
        neg_eps, _, region = state.heap[0]
        if -neg_eps < config.epsilon:
            break
        heapq.heappop(state.heap)
        if method.uses_bound and state.h > region.h_seen:
            # the incumbent improved since this region was scored
            state.evaluate(region)
            state.push(region)
            continue
        for child in refine(state, region):
            state.push(child)
        iterations += 1
        record(iterations)
    return SolveResult(state.incumbent, state.h, state.bound, iterations, trace, len(state.planes))


def solve(p: BilinearProgram, config: SolverConfig | None = None) -> SolveResult:
    """Anytime successive approximation with a certified bound.

    The returned value is within ``bound`` of the optimum. The program is
    converted to semi-compact form internally and the assignment is mapped
    back to the caller's variables.
    """
    config = config or SolverConfig()
    sc = to_semi_compact(p)
    start = None
    if config.presolve > 0:
        seeds = np.random.SeedSequence(config.seed).spawn(config.presolve)
        for ss in seeds:
            a, v = iterative_best_response(sc, ss)
            if start is None or v > start[1]:
                start = (a, v)
    result = _solve_semi_compact(sc, config, start)
    a = result.assignment
    if not p.is_semi_compact:
        a = split_normal_form(p, split_semi_compact(p, a))
    result.assignment = a
    return result


# offline bound --------------------------------------------------------------------


def offline_bound(C, n: int, epsilon: float) -> int:
    """Smallest k with kⁿ ≥ ‖C‖₂ √(nⁿ) / ε (grid points per dimension)."""
    if epsilon <= 0 or n < 1:
        raise ValueError("need epsilon > 0 and n >= 1")
    norm = float(C) if np.isscalar(C) else spectral_norm(C)
    target = norm * math.sqrt(float(n) ** n) / epsilon
    if target <= 1.0:
        return 1
    k = max(1, math.ceil(target ** (1.0 / n)))
    slack = 1.0 - 1e-12
    while k > 1 and float(k - 1) ** n >= target * slack:
        k -= 1
    while float(k) ** n < target * slack:
        k += 1
    return k


def grid_points(lo: np.ndarray, hi: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Cell centers of a k-per-dimension grid over a box and its covering radius."""
    n = lo.size
    step = (hi - lo) / k
    axes = [lo[i] + (np.arange(k) + 0.5) * step[i] for i in range(n)]
    mesh = np.array(list(itertools.product(*axes))) if n else np.zeros((1, 0))
    return mesh, float(0.5 * np.linalg.norm(step))


def grid_approximation(p: BilinearProgram, k: int) -> tuple[list[ResponsePlane], float]:
    """Best responses at a regular grid over the box of Y.

    Returns the planes and δ, the largest distance from a box point to the
    nearest grid point.
    """
    sc = to_semi_compact(p)
    lo, hi = y_box(sc)
    pts, delta = grid_points(lo, hi, k)
    planes = [best_response(sc, y)[0] for y in pts]
    return planes, delta

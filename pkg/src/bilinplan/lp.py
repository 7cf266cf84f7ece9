"""Dense two-phase primal simplex with dual extraction.

Problems are stated as

    max (or min)  cᵀx
    subject to    A x = b
                  G x ≤ h
                  x_j ≥ 0 for j not in ``free``

Free variables are split into a positive and a negative part, inequality rows
receive slacks, and rows are scaled by their largest coefficient before
pivoting. Duals are reported in the original row scaling with the convention
objective = bᵀλ + hᵀμ.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, SingularMatrix
from .linalg import lu_factor

FEAS_TOL = 1e-9
PHASE1_TOL = 1e-7
COST_TOL = 1e-9
PIVOT_TOL = 1e-9


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


def _vec(v, n=None) -> np.ndarray:
    if v is None:
        return np.zeros(0 if n is None else n)
    return np.asarray(v, dtype=float).reshape(-1)


def _mat(a, cols: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, cols))
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, cols))
    return a.reshape(-1, cols) if a.ndim == 1 else a


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    sense: str = "max"
    free: tuple[int, ...] = ()

    def normalized(self):
        c = _vec(self.c)
        n = c.size
        A = _mat(self.A, n)
        b = _vec(self.b, A.shape[0])
        G = _mat(self.G, n)
        h = _vec(self.h, G.shape[0])
        if A.shape[1] != n or G.shape[1] != n:
            raise DimensionMismatch(f"constraint matrices must have {n} columns")
        if b.size != A.shape[0] or h.size != G.shape[0]:
            raise DimensionMismatch("right-hand sides do not match row counts")
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(h))):
            raise ValueError("right-hand sides must be finite")
        free = np.zeros(n, dtype=bool)
        idx = np.asarray(self.free, dtype=np.int64).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise DimensionMismatch("free index out of range")
        free[idx] = True
        return c, A, b, G, h, free


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray
    duals: np.ndarray
    objective: float
    ineq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _failed(status, n, m, k, iters) -> LpSolution:
    nan = float("nan")
    return LpSolution(status, np.full(n, nan), np.full(m, nan), nan, np.full(k, nan), iters)


def solve_lp(p: LpProblem, max_iter: int | None = None) -> LpSolution:
    """Solve an LP with the two-phase simplex method."""
    c, A, b, G, h, free = p.normalized()
    n = c.size
    m_eq, m_in = A.shape[0], G.shape[0]
    m = m_eq + m_in
    sign_obj = 1.0 if p.sense == "max" else -1.0

    # structural columns: every variable, then negative parts of free ones
    neg_idx = np.flatnonzero(free)
    n_struct = n + neg_idx.size
    M = np.zeros((m, n_struct + m_in))
    M[:m_eq, :n] = A
    M[m_eq:, :n] = G
    M[:m_eq, n:n_struct] = -A[:, neg_idx]
    M[m_eq:, n:n_struct] = -G[:, neg_idx]
    M[m_eq:, n_struct:] = np.eye(m_in)
    rhs = np.concatenate([b, h])
    cost = np.zeros(M.shape[1])
    cost[:n] = sign_obj * c
    cost[n:n_struct] = -sign_obj * c[neg_idx]

    flip = np.where(rhs < 0, -1.0, 1.0)
    M *= flip[:, None]
    rhs = rhs * flip
    row_scale = np.max(np.abs(M), axis=1) if M.shape[1] else np.zeros(m)
    row_scale[row_scale == 0.0] = 1.0
    Ms = M / row_scale[:, None]
    rs = rhs / row_scale

    # initial basis: a slack with coefficient +1, otherwise an artificial
    n_real = M.shape[1]
    basis = np.empty(m, dtype=np.int64)
    needs_art = np.ones(m, dtype=bool)
    for i in range(m_eq, m):
        if flip[i] > 0:
            basis[i] = n_struct + (i - m_eq)
            needs_art[i] = False
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    N = n_real + n_art
    T = np.zeros((m + 1, N + 1))
    T[:m, :n_real] = Ms
    T[art_rows, n_real + np.arange(n_art)] = 1.0
    T[:m, N] = rs
    basis[art_rows] = n_real + np.arange(n_art)
    identity_col = basis.copy()

    if max_iter is None:
        max_iter = 50 * (m + N) + 1000
    bland_after = 2 * (m + N)
    total_iters = 0

    if n_art:
        # phase 1: maximize minus the sum of artificials
        T[m, :] = -T[art_rows, :].sum(axis=0)
        T[m, n_real:N] = 0.0
        allowed = np.ones(N, dtype=np.bool_)
        status, it = _kernels.run_simplex(
            T, basis, allowed, max_iter, bland_after, COST_TOL, PIVOT_TOL
        )
        total_iters += it
        if status == _kernels.ITERATION_LIMIT:
            return _failed(LpStatus.ITERATION_LIMIT, n, m_eq, m_in, total_iters)
        art_mask = basis >= n_real
        residual = float(np.sum(T[:m, N][art_mask] * row_scale[art_mask]))
        if residual > PHASE1_TOL * (1.0 + float(np.max(np.abs(rhs), initial=0.0))):
            return _failed(LpStatus.INFEASIBLE, n, m_eq, m_in, total_iters)
        # drive zero-level artificials out of the basis where possible
        for i in np.flatnonzero(art_mask):
            row = np.abs(T[i, :n_real])
            j = int(np.argmax(row)) if n_real else -1
            if j >= 0 and row[j] > PIVOT_TOL:
                prow = T[i] / T[i, j]
                T -= np.outer(T[:, j], prow)
                T[i] = prow
                basis[i] = j
        col = T[:m, N]
        col[(col < 0.0) & (col > -FEAS_TOL)] = 0.0

    # phase 2
    cfull = np.zeros(N)
    cfull[:n_real] = cost
    cb = cfull[basis]
    T[m, :N] = cb @ T[:m, :N] - cfull
    T[m, N] = cb @ T[:m, N]
    allowed = np.zeros(N, dtype=np.bool_)
    allowed[:n_real] = True
    status, it = _kernels.run_simplex(
        T, basis, allowed, max_iter, bland_after, COST_TOL, PIVOT_TOL
    )
    total_iters += it
    if status == _kernels.UNBOUNDED:
        return _failed(LpStatus.UNBOUNDED, n, m_eq, m_in, total_iters)
    if status == _kernels.ITERATION_LIMIT:
        return _failed(LpStatus.ITERATION_LIMIT, n, m_eq, m_in, total_iters)

    xs = np.zeros(N)
    xs[basis] = T[:m, N]
    # duals of the scaled rows sit under the initial identity columns
    y = T[m, identity_col] / row_scale
    # refine against the unscaled, sign-fixed system
    Bfull = np.zeros((m, N))
    Bfull[:, :n_real] = M
    Bfull[art_rows, n_real + np.arange(n_art)] = row_scale[art_rows]
    try:
        lu = lu_factor(Bfull[:, basis]) if m else None
    except SingularMatrix:
        lu = None
    if lu is not None:
        xb = lu.solve(rhs)
        if np.all(xb > -1e-7) and np.max(np.abs(xb - xs[basis])) < 1e-6 * (1 + np.max(np.abs(xb))):
            xs[basis] = xb
        yb = lu.solve_transpose(cfull[basis])
        if np.all(np.isfinite(yb)):
            y = yb
    xs[(xs < 0.0) & (xs > -1e-7)] = 0.0

    x = xs[:n].copy()
    x[neg_idx] -= xs[n:n_struct]
    y = y * flip * sign_obj
    duals = y[:m_eq].copy()
    ineq = y[m_eq:].copy()
    objective = float(c @ x)
    return LpSolution(LpStatus.OPTIMAL, x, duals, objective, ineq, total_iters)


def solve_lp_with_free_vars(p: LpProblem, free) -> LpSolution:
    """Solve ``p`` with the listed variables unrestricted in sign."""
    merged = tuple(sorted(set(int(i) for i in p.free) | set(int(i) for i in free)))
    return solve_lp(replace(p, free=merged))

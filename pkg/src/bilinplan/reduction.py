"""Dimensionality reduction of the bilinear term.

``reduce`` keeps the singular directions of C whose (scaled) singular values
exceed a threshold. The second side gains |kept| sign-free variables
ȳ = T₁ᵀy linked to the original y, which move into the linear part. The
objective changes by at most the largest discarded scaled singular value.

``project_objective`` first removes the components of C that are constant on
the affine hulls of X and Y, which never changes the objective on the
feasible set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bilinear import EQ, Assignment, BilinearProgram, to_normal_form
from .errors import RankDeficientRows, XInfeasible, YInfeasible
from .linalg import solve_linear, svd
from .lp import LpStatus

ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ReductionResult:
    reduced_program: BilinearProgram
    kept_dims: int
    error_bound: float
    basis: np.ndarray
    singular_values: np.ndarray
    scale_x: float = 1.0
    scale_y: float = 1.0
    original: BilinearProgram | None = None

    @property
    def changed(self) -> bool:
        return self.reduced_program is not self.original

    def lift(self, a: Assignment) -> Assignment:
        """Map an assignment of the reduced program to the original program."""
        if not self.changed:
            return a
        ny = self.original.ny
        return Assignment(a.w, a.x, a.z[:ny], a.z[ny:])

    def embed(self, a: Assignment) -> Assignment:
        """Map an assignment of the original program to the reduced program."""
        if not self.changed:
            return a
        return Assignment(a.w, a.x, self.basis.T @ a.y, np.concatenate([a.y, a.z]))


def _side_radius(p: BilinearProgram, side: int, support: np.ndarray) -> float:
    """Upper bound on ‖v_S‖₂ over one side's feasible set (v = x or y).

    Only coordinates in ``support`` (where C is nonzero) matter. The bound is
    the smaller of the norm of the per-coordinate box corner and, when those
    variables are nonnegative, their largest sum.
    """
    n = p.nx if side == 1 else p.ny
    if support.size == 0:
        return 0.0
    lp = p.side1_lp if side == 1 else p.side2_lp
    extra = p.nw if side == 1 else p.nz
    free = p.x_free if side == 1 else p.y_free
    err = XInfeasible if side == 1 else YInfeasible
    corner = np.zeros(support.size)
    unbounded = False
    for k, i in enumerate(support):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = sign
            sol = lp(c, np.zeros(extra))
            if sol.status is LpStatus.INFEASIBLE:
                raise err("feasible set is empty")
            if not sol.optimal:
                unbounded = True
                break
            corner[k] = max(corner[k], abs(sol.objective))
        if unbounded:
            break
    radius = np.inf if unbounded else float(np.linalg.norm(corner))
    if not np.any(free[support]):
        c = np.zeros(n)
        c[support] = 1.0
        sol = lp(c, np.zeros(extra))
        if sol.optimal:
            radius = min(radius, max(float(sol.objective), 0.0))
    return radius


def reduce(p: BilinearProgram, epsilon: float = 1e-4, scale: str = "auto") -> ReductionResult:
    """Drop singular directions of C whose scaled singular value is ≤ ε.

    With ``scale="auto"`` singular values are multiplied by radii R_x, R_y of
    X and Y so that the threshold and the reported error bound are in
    objective units: |f* − f̃*| ≤ error_bound.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if scale not in ("auto", "none"):
        raise ValueError("scale must be 'auto' or 'none'")
    if np.any(p.y_free):
        raise ValueError("reduce expects nonnegative y variables")
    if scale == "auto":
        live_x = np.flatnonzero(np.any(p.C != 0.0, axis=1))
        live_y = np.flatnonzero(np.any(p.C != 0.0, axis=0))
        rx, ry = _side_radius(p, 1, live_x), _side_radius(p, 2, live_y)
    else:
        rx = ry = 1.0
    U, sigma, Vt = svd(p.C)
    scaled = sigma * rx * ry if np.isfinite(rx * ry) else np.where(sigma > 0, np.inf, 0.0)
    top = float(scaled[0]) if scaled.size else 0.0
    noise = 1e-13 * max(1.0, top) if np.isfinite(top) else 0.0
    keep = scaled > max(epsilon, noise)
    k = int(np.count_nonzero(keep))
    dropped = scaled[~keep]
    error = float(dropped.max()) if dropped.size else 0.0
    # singular values missing from the thin SVD are zero
    if k == p.ny:
        return ReductionResult(p, k, error, np.eye(p.ny), sigma, rx, ry, p)
    q = to_normal_form(p) if p.sense2 != EQ else p
    ny, nz, m2 = q.ny, q.nz, q.b2.size
    T1 = Vt[:k].T
    Cbar = U[:, :k] * sigma[:k]
    A2 = np.zeros((m2 + k, k))
    A2[m2:] = -np.eye(k)
    B2 = np.zeros((m2 + k, ny + nz))
    B2[:m2, :ny] = q.A2
    B2[:m2, ny:] = q.B2
    B2[m2:, :ny] = T1.T
    reduced = BilinearProgram(
        A1=q.A1, B1=q.B1, b1=q.b1,
        A2=A2, B2=B2, b2=np.concatenate([q.b2, np.zeros(k)]),
        r1=q.r1, s1=q.s1, r2=np.zeros(k), s2=np.concatenate([q.r2, q.s2]),
        C=Cbar, sense1=q.sense1, sense2=EQ,
        x_free=q.x_free, y_free=np.ones(k, bool), constant=q.constant,
    )
    return ReductionResult(reduced, k, error, T1, sigma, rx, ry, q)


# projection ---------------------------------------------------------------------


def _row_space(A: np.ndarray, b: np.ndarray):
    """Orthonormal basis E of the row space and the min-norm solution of Ax = b.

    Dependent rows are dropped; RankDeficientRows is raised when they
    contradict the kept rows.
    """
    n = A.shape[1]
    basis = []
    kept = []
    for i, row in enumerate(A):
        norm = np.linalg.norm(row)
        if norm == 0.0:
            if abs(b[i]) > ROW_TOL:
                raise RankDeficientRows(f"row {i} is zero with nonzero right-hand side")
            continue
        v = row.copy()
        for _ in range(2):
            for e in basis:
                v -= (e @ v) * e
        if np.linalg.norm(v) > ROW_TOL * norm:
            basis.append(v / np.linalg.norm(v))
            kept.append(i)
    if not kept:
        return np.zeros((n, 0)), np.zeros(n)
    Ak = A[kept]
    x0 = Ak.T @ solve_linear(Ak @ Ak.T, b[kept])
    resid = np.abs(A @ x0 - b)
    if np.any(resid > 1e-8 * (1.0 + np.abs(b))):
        raise RankDeficientRows("dependent constraint rows are inconsistent")
    return np.column_stack(basis), x0


def _projector(A: np.ndarray, b: np.ndarray):
    E, x0 = _row_space(A, b)
    return np.eye(A.shape[1]) - E @ E.T, x0


def project_lp_objective(c, A, b) -> tuple[np.ndarray, float]:
    """(c̃, shift) with cᵀx = c̃ᵀx + shift for every x satisfying Ax = b.

    c̃ = (I − Aᵀ(AAᵀ)⁻¹A)c and shift = cᵀAᵀ(AAᵀ)⁻¹b.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q, x0 = _projector(A, np.asarray(b, dtype=float))
    return Q @ c, float(c @ x0)


def _equality_rows(A, B, b, sense):
    """Rows of an equality side that involve only the bilinear variables."""
    if sense != EQ:
        return A[:0], b[:0]
    pure = ~np.any(B != 0.0, axis=1) if B.size else np.ones(A.shape[0], bool)
    return A[pure], b[pure]


def project_objective(p: BilinearProgram, linear: bool = True) -> BilinearProgram:
    """Replace C by Q₁CQ₂ without changing the objective on the feasible set.

    Qᵢ projects onto the null space of the equality rows of side i that
    contain only x (or y). The parts of C removed by the projection become
    linear terms and a constant. With ``linear=True`` the linear terms are
    projected as well and their constant parts move into ``constant``.
    """
    A1, b1 = _equality_rows(p.A1, p.B1, p.b1, p.sense1)
    A2, b2 = _equality_rows(p.A2, p.B2, p.b2, p.sense2)
    Q1, x0 = _projector(A1, b1) if A1.shape[0] else (np.eye(p.nx), np.zeros(p.nx))
    Q2, y0 = _projector(A2, b2) if A2.shape[0] else (np.eye(p.ny), np.zeros(p.ny))
    C = p.C
    Ct = Q1 @ C @ Q2
    r1 = p.r1 + C @ y0
    r2 = p.r2 + C.T @ x0
    const = p.constant - float(x0 @ C @ y0)
    if linear:
        const += float(r1 @ x0 + r2 @ y0)
        r1 = Q1 @ r1
        r2 = Q2 @ r2
    # clean rounding noise so exact cancellations stay exact
    scale = max(1.0, float(np.max(np.abs(C), initial=0.0)))
    Ct = np.where(np.abs(Ct) < 1e-13 * scale, 0.0, Ct)
    return p.replace(C=Ct, r1=r1, r2=r2, constant=const)

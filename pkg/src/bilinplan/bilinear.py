"""Separable bilinear programs, form transforms and best responses.

A program in normal form is

    maximize   s₁ᵀw + r₁ᵀx + xᵀCy + r₂ᵀy + s₂ᵀz + constant
    subject to A₁x + B₁w = b₁    (or ≤ b₁ for an inequality-form side)
               A₂y + B₂z = b₂    (or ≤ b₂)
               w, z ≥ 0, x ≥ 0 and y ≥ 0 except where marked free.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, XInfeasible, XUnbounded, YInfeasible, YUnbounded
from .lp import LpProblem, LpSolution, LpStatus, solve_lp

EQ = "eq"
LE = "le"


def _as_matrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    if a is None:
        return np.zeros((rows or 0, cols or 0))
    m = np.asarray(a, dtype=float)
    if m.size == 0:
        return np.zeros((rows if rows is not None else 0, cols if cols is not None else 0))
    return np.atleast_2d(m)


def _as_vector(v, n: int = 0) -> np.ndarray:
    if v is None:
        return np.zeros(n)
    return np.asarray(v, dtype=float).reshape(-1)


@dataclass(frozen=True, eq=False)
class BilinearProgram:
    A1: np.ndarray
    B1: np.ndarray
    b1: np.ndarray
    A2: np.ndarray
    B2: np.ndarray
    b2: np.ndarray
    r1: np.ndarray
    s1: np.ndarray
    r2: np.ndarray
    s2: np.ndarray
    C: np.ndarray
    sense1: str = EQ
    sense2: str = EQ
    x_free: np.ndarray | None = None
    y_free: np.ndarray | None = None
    constant: float = 0.0

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        nx, ny = C.shape
        r1, r2 = _as_vector(self.r1, nx), _as_vector(self.r2, ny)
        b1, b2 = _as_vector(self.b1), _as_vector(self.b2)
        A1 = _as_matrix(self.A1, b1.size, nx)
        A2 = _as_matrix(self.A2, b2.size, ny)
        s1, s2 = _as_vector(self.s1), _as_vector(self.s2)
        B1 = _as_matrix(self.B1, b1.size, s1.size)
        B2 = _as_matrix(self.B2, b2.size, s2.size)
        x_free = np.zeros(nx, bool) if self.x_free is None else np.asarray(self.x_free, bool).reshape(-1)
        y_free = np.zeros(ny, bool) if self.y_free is None else np.asarray(self.y_free, bool).reshape(-1)
        checks = [
            (r1.size == nx, "r1 must have |x| entries"),
            (r2.size == ny, "r2 must have |y| entries"),
            (A1.shape == (b1.size, nx), f"A1 must be {b1.size}x{nx}, got {A1.shape}"),
            (A2.shape == (b2.size, ny), f"A2 must be {b2.size}x{ny}, got {A2.shape}"),
            (B1.shape == (b1.size, s1.size), f"B1 must be {b1.size}x{s1.size}, got {B1.shape}"),
            (B2.shape == (b2.size, s2.size), f"B2 must be {b2.size}x{s2.size}, got {B2.shape}"),
            (x_free.size == nx and y_free.size == ny, "free masks must match |x| and |y|"),
            (self.sense1 in (EQ, LE) and self.sense2 in (EQ, LE), "sense must be 'eq' or 'le'"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DimensionMismatch(msg)
        for name, val in dict(A1=A1, B1=B1, b1=b1, A2=A2, B2=B2, b2=b2, r1=r1, s1=s1,
                              r2=r2, s2=s2, C=C, x_free=x_free, y_free=y_free).items():
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "constant", float(self.constant))

    # sizes ---------------------------------------------------------------
    @property
    def nx(self) -> int:
        return self.C.shape[0]

    @property
    def ny(self) -> int:
        return self.C.shape[1]

    @property
    def nw(self) -> int:
        return self.s1.size

    @property
    def nz(self) -> int:
        return self.s2.size

    @property
    def form(self) -> str:
        """``compact``, ``semi-compact`` or ``normal`` (most specific that applies)."""
        if np.any(self.s2):
            return "normal"
        return "semi-compact" if np.any(self.s1) else "compact"

    @property
    def is_semi_compact(self) -> bool:
        return not np.any(self.s2)

    @property
    def is_equality_form(self) -> bool:
        return self.sense1 == EQ and self.sense2 == EQ

    def replace(self, **changes) -> "BilinearProgram":
        return replace(self, **changes)

    # side LPs --------------------------------------------------------------
    @cached_property
    def _side1(self):
        return np.hstack([self.A1, self.B1]), np.flatnonzero(self.x_free)

    @cached_property
    def _side2(self):
        return np.hstack([self.A2, self.B2]), np.flatnonzero(self.y_free)

    def side1_lp(self, cx, cw=None, G=None, h=None) -> LpSolution:
        """Maximize cxᵀx + cwᵀw over X (optionally with extra rows G[x;w] ≤ h)."""
        M, free = self._side1
        c = np.concatenate([cx, self.s1 if cw is None else cw])
        return solve_lp(self._side_problem(M, self.b1, self.sense1, c, free, G, h))

    def side2_lp(self, cy, cz=None, G=None, h=None) -> LpSolution:
        """Maximize cyᵀy + czᵀz over Y (optionally with extra rows G[y;z] ≤ h)."""
        M, free = self._side2
        c = np.concatenate([cy, self.s2 if cz is None else cz])
        return solve_lp(self._side_problem(M, self.b2, self.sense2, c, free, G, h))

    @staticmethod
    def _side_problem(M, b, sense, c, free, G, h) -> LpProblem:
        if sense == EQ:
            A, bb, GG, hh = M, b, G, h
        else:
            A, bb = None, None
            GG = M if G is None else np.vstack([M, G])
            hh = b if h is None else np.concatenate([b, h])
        return LpProblem(c, A, bb, GG, hh, "max", tuple(int(i) for i in free))


@dataclass(frozen=True)
class Assignment:
    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("w", "x", "y", "z"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))


@dataclass(frozen=True)
class ResponsePlane:
    """Affine function y ↦ offset + slopeᵀy induced by a fixed side-1 choice."""

    x: np.ndarray
    w: np.ndarray
    offset: float
    slope: np.ndarray
    source_pivot: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def value(self, y) -> float:
        return float(self.offset + self.slope @ np.asarray(y, dtype=float))


def evaluate_objective(p: BilinearProgram, a: Assignment) -> float:
    """s₁ᵀw + r₁ᵀx + xᵀCy + r₂ᵀy + s₂ᵀz (+ the program's constant)."""
    if (a.w.size, a.x.size, a.y.size, a.z.size) != (p.nw, p.nx, p.ny, p.nz):
        raise DimensionMismatch(
            f"assignment sizes {(a.w.size, a.x.size, a.y.size, a.z.size)} do not match "
            f"program sizes {(p.nw, p.nx, p.ny, p.nz)}"
        )
    return float(
        p.s1 @ a.w + p.r1 @ a.x + a.x @ p.C @ a.y + p.r2 @ a.y + p.s2 @ a.z + p.constant
    )


def is_feasible(p: BilinearProgram, a: Assignment, tol: float = 1e-7) -> bool:
    def side(A, B, b, sense, v, u, free):
        if np.any(v[~free] < -tol) or np.any(u < -tol):
            return False
        lhs = A @ v + B @ u
        scale = tol * (1.0 + np.max(np.abs(b), initial=0.0))
        if sense == EQ:
            return bool(np.all(np.abs(lhs - b) <= scale))
        return bool(np.all(lhs <= b + scale))

    return side(p.A1, p.B1, p.b1, p.sense1, a.x, a.w, p.x_free) and side(
        p.A2, p.B2, p.b2, p.sense2, a.y, a.z, p.y_free
    )


# transforms -------------------------------------------------------------------


def to_normal_form(p: BilinearProgram) -> BilinearProgram:
    """Turn inequality sides into equalities by appending slacks to w or z."""
    if p.is_equality_form:
        return p
    changes = {}
    if p.sense1 == LE:
        m = p.b1.size
        changes.update(B1=np.hstack([p.B1, np.eye(m)]), s1=np.concatenate([p.s1, np.zeros(m)]), sense1=EQ)
    if p.sense2 == LE:
        m = p.b2.size
        changes.update(B2=np.hstack([p.B2, np.eye(m)]), s2=np.concatenate([p.s2, np.zeros(m)]), sense2=EQ)
    return p.replace(**changes)


def to_semi_compact(p: BilinearProgram) -> BilinearProgram:
    """Move s₂ᵀz into the bilinear term through x̂ = 1 and ŷ = s₂ᵀz.

    Programs that already have s₂ = 0 come back unchanged. Otherwise |x| and
    |y| grow by one and C becomes the block matrix [C, 0; 0, 1].
    """
    if p.is_semi_compact:
        return p
    p = to_normal_form(p)
    nx, ny, m1, m2 = p.nx, p.ny, p.b1.size, p.b2.size
    C = np.zeros((nx + 1, ny + 1))
    C[:nx, :ny] = p.C
    C[nx, ny] = 1.0
    A1 = np.zeros((m1 + 1, nx + 1))
    A1[:m1, :nx] = p.A1
    A1[m1, nx] = 1.0
    B1 = np.vstack([p.B1, np.zeros((1, p.nw))])
    A2 = np.zeros((m2 + 1, ny + 1))
    A2[:m2, :ny] = p.A2
    A2[m2, ny] = 1.0
    B2 = np.vstack([p.B2, -p.s2[None, :]])
    return p.replace(
        A1=A1, B1=B1, b1=np.append(p.b1, 1.0),
        A2=A2, B2=B2, b2=np.append(p.b2, 0.0),
        r1=np.append(p.r1, 0.0), r2=np.append(p.r2, 0.0),
        s2=np.zeros(p.nz), C=C,
        x_free=np.append(p.x_free, False), y_free=np.append(p.y_free, True),
    )


def transpose(p: BilinearProgram) -> BilinearProgram:
    """Swap the roles of the two sides (x ↔ y, w ↔ z, C ↔ Cᵀ)."""
    return BilinearProgram(
        A1=p.A2, B1=p.B2, b1=p.b2, A2=p.A1, B2=p.B1, b2=p.b1,
        r1=p.r2, s1=p.s2, r2=p.r1, s2=p.s1, C=p.C.T,
        sense1=p.sense2, sense2=p.sense1, x_free=p.y_free, y_free=p.x_free,
        constant=p.constant,
    )


def split_semi_compact(p_orig: BilinearProgram, a: Assignment) -> Assignment:
    """Map an assignment of ``to_semi_compact(p_orig)`` back to ``p_orig``."""
    if p_orig.is_semi_compact:
        return a
    return Assignment(a.w, a.x[:-1], a.y[:-1], a.z)


def split_normal_form(p_orig: BilinearProgram, a: Assignment) -> Assignment:
    """Drop slack entries added by ``to_normal_form``."""
    return Assignment(a.w[: p_orig.nw], a.x, a.y, a.z[: p_orig.nz])


# best responses -------------------------------------------------------------------


def _require_semi_compact(p: BilinearProgram) -> None:
    if not p.is_semi_compact:
        raise ValueError("program must be semi-compact (s2 = 0); apply to_semi_compact first")


def _side1_response(p: BilinearProgram, y: np.ndarray) -> ResponsePlane:
    sol = p.side1_lp(p.r1 + p.C @ y)
    if sol.status is LpStatus.INFEASIBLE:
        raise XInfeasible("side-1 constraints have no feasible point")
    if sol.status is LpStatus.UNBOUNDED:
        raise XUnbounded("side-1 best response is unbounded")
    if not sol.optimal:
        raise XUnbounded(f"side-1 best response failed: {sol.status.value}")
    x, w = sol.x[: p.nx], sol.x[p.nx:]
    offset = float(p.s1 @ w + p.r1 @ x)
    slope = p.C.T @ x + p.r2
    return ResponsePlane(x, w, offset, slope, y.copy())


def best_response(p: BilinearProgram, y) -> tuple[ResponsePlane, float]:
    """Best side-1 response to ``y`` and the value g(y).

    ``y`` need not lie in Y. Requires a semi-compact program.
    """
    _require_semi_compact(p)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != p.ny:
        raise DimensionMismatch(f"y has {y.size} entries, program has {p.ny}")
    plane = _side1_response(p, y)
    return plane, plane.value(y)


def best_response_value(p: BilinearProgram, y) -> float:
    """g(y) = max over X and over z compatible with y of the full objective.

    Works for any form. For a program with s₂ ≠ 0 this is the sum of a convex
    part (the side-1 response) and a concave part (the best z for this y).
    Returns -inf when no z completes ``y`` to a point of Y.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    plane = _side1_response(p, y)
    value = plane.value(y) + p.constant
    if p.nz == 0 and not np.any(p.s2):
        return value
    # best z for this fixed y: max s₂ᵀz s.t. B₂z (=|≤) b₂ − A₂y
    rhs = p.b2 - p.A2 @ y
    if p.sense2 == EQ:
        sol = solve_lp(LpProblem(p.s2, p.B2, rhs))
    else:
        sol = solve_lp(LpProblem(p.s2, G=p.B2, h=rhs))
    if sol.status is LpStatus.INFEASIBLE:
        return -np.inf
    if sol.status is LpStatus.UNBOUNDED:
        return np.inf
    return value + sol.objective


def best_y_for_plane(p: BilinearProgram, plane: ResponsePlane) -> tuple[Assignment, float]:
    """Maximize plane.value(y) + s₂ᵀz over Y for one fixed side-1 choice."""
    sol = p.side2_lp(plane.slope)
    if sol.status is LpStatus.INFEASIBLE:
        raise YInfeasible("side-2 constraints have no feasible point")
    if not sol.optimal:
        raise YUnbounded("side-2 response is unbounded")
    y, z = sol.x[: p.ny], sol.x[p.ny:]
    value = float(plane.offset + sol.objective + p.constant)
    return Assignment(plane.w, plane.x, y, z), value


def extract_incumbent(p: BilinearProgram, planes) -> tuple[Assignment, float]:
    """Best (x, w, y, z) using side-1 choices drawn from ``planes``."""
    _require_semi_compact(p)
    planes = list(planes)
    if not planes:
        raise ValueError("need at least one response plane")
    best = None
    for plane in planes:
        a, v = best_y_for_plane(p, plane)
        if best is None or v > best[1]:
            best = (a, v)
    return best

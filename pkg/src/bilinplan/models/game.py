"""Two-player games where each player solves a linear program.

Player 1 maximizes r₁ᵀx + xᵀC₁y over A₁x = b₁, x ≥ 0, and player 2
maximizes r₂ᵀy + xᵀC₂y over A₂y = b₂, y ≥ 0. Summing the two duality gaps
gives a separable bilinear program whose optimum is 0 exactly at the
equilibria.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bilinear import Assignment, BilinearProgram
from ..errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class GameSpec:
    r1: np.ndarray
    r2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    A1: np.ndarray
    b1: np.ndarray
    A2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        C1 = np.atleast_2d(np.asarray(self.C1, float))
        C2 = np.atleast_2d(np.asarray(self.C2, float))
        nx, ny = C1.shape
        fields = dict(
            C1=C1, C2=C2,
            r1=np.asarray(self.r1, float).reshape(-1), r2=np.asarray(self.r2, float).reshape(-1),
            A1=np.atleast_2d(np.asarray(self.A1, float)), A2=np.atleast_2d(np.asarray(self.A2, float)),
            b1=np.asarray(self.b1, float).reshape(-1), b2=np.asarray(self.b2, float).reshape(-1),
        )
        if (C2.shape != (nx, ny) or fields["r1"].size != nx or fields["r2"].size != ny
                or fields["A1"].shape != (fields["b1"].size, nx)
                or fields["A2"].shape != (fields["b2"].size, ny)):
            raise DimensionMismatch("game dimensions are inconsistent")
        for k, v in fields.items():
            v.setflags(write=False)
            object.__setattr__(self, k, v)

    @property
    def is_normal_form(self) -> bool:
        return (self.A1.shape[0] == 1 and np.all(self.A1 == 1.0) and np.all(self.b1 == 1.0)
                and self.A2.shape[0] == 1 and np.all(self.A2 == 1.0) and np.all(self.b2 == 1.0))


def normal_form_game(payoff1, payoff2) -> GameSpec:
    """Bimatrix game: rows are player 1's actions, columns player 2's."""
    P1 = np.atleast_2d(np.asarray(payoff1, float))
    P2 = np.atleast_2d(np.asarray(payoff2, float))
    nx, ny = P1.shape
    return GameSpec(np.zeros(nx), np.zeros(ny), P1, P2,
                    np.ones((1, nx)), np.ones(1), np.ones((1, ny)), np.ones(1))


def default_dual_bound(g: GameSpec) -> float:
    """Box radius for the dual variables.

    For normal-form games the duals at an equilibrium equal the players'
    payoffs, which never exceed max|r| + max|C| in magnitude.
    """
    mag = max(np.max(np.abs(g.r1), initial=0.0), np.max(np.abs(g.r2), initial=0.0))
    mag += max(np.max(np.abs(g.C1), initial=0.0), np.max(np.abs(g.C2), initial=0.0))
    return float(mag + 1.0) if g.is_normal_form else float(100.0 * (mag + 1.0))


def _side(A_own, b_own, C_other_t, r_other, A_other, b_other, bound):
    """Constraints of one side: own primal rows plus the other player's dual rows.

    Variables: own strategy (bilinear part), then λ⁺, λ⁻, slacks of the dual
    rows, and slacks of the box λ± ≤ bound (the linear part).
    """
    m_own, n_own = A_own.shape
    m_oth, n_oth = A_other.shape
    n_lin = 2 * m_oth + n_oth + 2 * m_oth
    rows = m_own + n_oth + 2 * m_oth
    A = np.zeros((rows, n_own))
    B = np.zeros((rows, n_lin))
    b = np.zeros(rows)
    A[:m_own] = A_own
    b[:m_own] = b_own
    # r_other + C_otherᵀ·own − A_otherᵀλ ≤ 0, written with a slack
    r = slice(m_own, m_own + n_oth)
    A[r] = C_other_t
    B[r, :m_oth] = -A_other.T
    B[r, m_oth:2 * m_oth] = A_other.T
    B[r, 2 * m_oth:2 * m_oth + n_oth] = np.eye(n_oth)
    b[r] = -r_other
    # λ⁺ + slack = bound, λ⁻ + slack = bound
    box = slice(m_own + n_oth, rows)
    B[box, : 2 * m_oth] = np.eye(2 * m_oth)
    B[box, 2 * m_oth + n_oth:] = np.eye(2 * m_oth)
    b[box] = bound
    s = np.zeros(n_lin)
    s[:m_oth] = -b_other
    s[m_oth:2 * m_oth] = b_other
    return A, B, b, s


def compile_game(g: GameSpec, dual_bound: float | None = None) -> BilinearProgram:
    """Equilibrium program: maximize r₁ᵀx + r₂ᵀy + xᵀ(C₁+C₂)y − b₁ᵀλ₁ − b₂ᵀλ₂.

    The value is minus the total duality gap, so it is ≤ 0 everywhere and 0
    exactly at Nash equilibria. Side 1 holds (x, λ₂), side 2 holds (y, λ₁),
    each λ split into two nonnegative parts boxed by ``dual_bound``.
    """
    bound = default_dual_bound(g) if dual_bound is None else float(dual_bound)
    A1, B1, b1, s1 = _side(g.A1, g.b1, g.C2.T, g.r2, g.A2, g.b2, bound)
    A2, B2, b2, s2 = _side(g.A2, g.b2, g.C1, g.r1, g.A1, g.b1, bound)
    return BilinearProgram(A1, B1, b1, A2, B2, b2, g.r1, s1, g.r2, s2, g.C1 + g.C2)


def game_residual(value: float) -> float:
    """Total duality gap k₁ + k₂ implied by a compiled-program value."""
    return -float(value)


def strategies(g: GameSpec, a: Assignment) -> tuple[np.ndarray, np.ndarray]:
    return a.x.copy(), a.y.copy()


def dual_values(g: GameSpec, a: Assignment) -> tuple[np.ndarray, np.ndarray]:
    """λ₁ (from z) and λ₂ (from w) of a compiled-program assignment."""
    m1, m2 = g.A1.shape[0], g.A2.shape[0]
    lam2 = a.w[:m2] - a.w[m2:2 * m2]
    lam1 = a.z[:m1] - a.z[m1:2 * m1]
    return lam1, lam2

"""Shared oracles and random instance generators for the test suite."""

from __future__ import annotations

import itertools

import numpy as np

from bilinplan.bilinear import BilinearProgram, to_normal_form
from bilinplan.lp import LpProblem, solve_lp
from bilinplan.models import AgentModel, DecMdp


def vertices(M: np.ndarray, b: np.ndarray) -> list[np.ndarray]:
    """Basic feasible solutions of {v ≥ 0 : Mv = b} by brute force."""
    m, n = M.shape
    if m == 0:
        return [np.zeros(n)]
    out = []
    for cols in itertools.combinations(range(n), m):
        B = M[:, cols]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        vb = np.linalg.solve(B, b)
        if vb.min() < -1e-9:
            continue
        v = np.zeros(n)
        v[list(cols)] = vb
        out.append(v)
    return out


def bilinear_oracle(p: BilinearProgram) -> float:
    """Optimum of a small program: enumerate side-1 vertices, solve side 2 by LP.

    Free x columns are split into two nonnegative parts before enumeration.
    """
    q = to_normal_form(p)
    free = np.flatnonzero(q.x_free)
    M1 = np.hstack([q.A1, -q.A1[:, free], q.B1])
    M2 = np.hstack([q.A2, q.B2])
    y_free = tuple(int(i) for i in np.flatnonzero(q.y_free))
    best = -np.inf
    for v in vertices(M1, q.b1):
        x = v[: q.nx].copy()
        x[free] -= v[q.nx: q.nx + free.size]
        w = v[q.nx + free.size:]
        c = np.concatenate([q.r2 + q.C.T @ x, q.s2])
        s = solve_lp(LpProblem(c, M2, q.b2, free=y_free))
        best = max(best, float(q.s1 @ w + q.r1 @ x + s.objective + q.constant))
    return best


def random_program(rng: np.random.Generator, nx=3, ny=2, nw=1, nz=1, m1=2, m2=1, rank=None) -> BilinearProgram:
    """Random bounded equality-form program with nonnegative variables.

    Each side contains the row sum(vars) = scale, which keeps it bounded.
    """
    def side(n, k, m):
        A = rng.uniform(-1, 1, (m, n))
        B = rng.uniform(-1, 1, (m, k))
        A[0], B[0] = 1.0, 1.0
        v = rng.uniform(0.1, 1.0, n + k)
        return A, B, A @ v[:n] + B @ v[n:]

    A1, B1, b1 = side(nx, nw, m1)
    A2, B2, b2 = side(ny, nz, m2)
    C = rng.uniform(-1, 1, (nx, ny))
    if rank is not None:
        C = rng.uniform(-1, 1, (nx, rank)) @ rng.uniform(-1, 1, (rank, ny))
    return BilinearProgram(
        A1=A1, B1=B1, b1=b1, A2=A2, B2=B2, b2=b2,
        r1=rng.uniform(-1, 1, nx), s1=rng.uniform(-1, 1, nw),
        r2=rng.uniform(-1, 1, ny), s2=rng.uniform(-1, 1, nz), C=C,
    )


def random_agent(rng: np.random.Generator, states: int, actions: int) -> AgentModel:
    """Acyclic agent: state i moves only to later states or to the terminal."""
    names = tuple(f"s{i}" for i in range(states)) + ("end",)
    S = states + 1
    P = np.zeros((S, actions, S))
    for s in range(states):
        for a in range(actions):
            targets = np.arange(s + 1, S)
            pick = targets[rng.random(targets.size) < 0.6]
            if pick.size == 0:
                pick = np.array([rng.choice(targets)])
            P[s, a, pick] = rng.dirichlet(np.ones(pick.size))
    r = np.zeros((S, actions))
    r[:states] = rng.uniform(0, 1, (states, actions))
    alpha = np.zeros(S)
    alpha[0] = 1.0
    return AgentModel(names, tuple(f"a{k}" for k in range(actions)), P, r, alpha, frozenset({"end"}))


def random_decmdp(rng: np.random.Generator, max_states=5, max_actions=2, density=0.3) -> DecMdp:
    a1 = random_agent(rng, int(rng.integers(1, max_states + 1)), int(rng.integers(1, max_actions + 1)))
    a2 = random_agent(rng, int(rng.integers(1, max_states + 1)), int(rng.integers(1, max_actions + 1)))
    R = np.zeros((len(a1.states) * len(a1.actions), len(a2.states) * len(a2.actions)))
    live1 = ~np.repeat(a1.terminal_mask, len(a1.actions))
    live2 = ~np.repeat(a2.terminal_mask, len(a2.actions))
    mask = (rng.random(R.shape) < density) & live1[:, None] & live2[None, :]
    R[mask] = rng.uniform(0, 2, mask.sum())
    return DecMdp(a1, a2, R)


def example23() -> BilinearProgram:
    """maximize −x + xy − 2z subject to −1 ≤ x ≤ 1, y − z ≤ 2, z ≥ 0 (x, y free).

    Its best-response function is g(y) = |y − 1| − 2·max(0, y − 2), which is
    not convex because of the concave z part.
    """
    return BilinearProgram(
        A1=[[1.0], [-1.0]], B1=np.zeros((2, 0)), b1=[1.0, 1.0],
        A2=[[1.0]], B2=[[-1.0]], b2=[2.0],
        r1=[-1.0], s1=[], r2=[0.0], s2=[-2.0], C=[[1.0]],
        sense1="le", sense2="le", x_free=[True], y_free=[True],
    )


def example23_g(y: float) -> float:
    return abs(y - 1.0) - 2.0 * max(0.0, y - 2.0)


def random_semi_compact(rng: np.random.Generator, nx=4, ny=3, nw=2) -> BilinearProgram:
    """Random bounded program with s₂ = 0 and an inequality-form side 1."""
    A1 = rng.uniform(-1, 1, (3, nx))
    B1 = rng.uniform(-1, 1, (3, nw))
    A1[0], B1[0] = 1.0, 1.0
    v = rng.uniform(0, 1, nx + nw)
    b1 = A1 @ v[:nx] + B1 @ v[nx:] + rng.uniform(0, 1, 3)
    return BilinearProgram(
        A1=A1, B1=B1, b1=b1, A2=np.ones((1, ny)), B2=np.zeros((1, 0)), b2=[1.0],
        r1=rng.uniform(-1, 1, nx), s1=rng.uniform(-1, 1, nw), r2=rng.uniform(-1, 1, ny), s2=[],
        C=rng.uniform(-2, 2, (nx, ny)), sense1="le",
    )


def rows_as_text(A, b, labels) -> set:
    """Each constraint row as (frozenset of (label, coef), rhs)."""
    out = set()
    for row, rhs in zip(A, b):
        terms = frozenset((labels[j], float(v)) for j, v in enumerate(row) if v != 0)
        out.add((terms, float(rhs)))
    return out


def _row(*terms, rhs=0.0):
    return (frozenset(terms), rhs)


# flow rows of the example4() model, written out by hand
EXAMPLE4_ROWS1 = {
    _row(("x(s1,a1)", 1.0), rhs=1.0),
    _row(("x(s2,a1)", 1.0), ("x(s2,a2)", 1.0), ("x(s1,a1)", -1.0)),
    _row(("x(s3,a1)", 1.0), ("x(s2,a1)", -1.0)),
    _row(("x(s4,a1)", 1.0), ("x(s2,a2)", -1.0)),
}
EXAMPLE4_ROWS2 = {
    _row(("y(s1,a1)", 1.0), ("y(s1,a2)", 1.0), rhs=1.0),
    _row(("y(s2,a1)", 1.0), ("y(s1,a1)", -1.0)),
    _row(("y(s3,a1)", 1.0), ("y(s2,a1)", -1.0)),
    _row(("y(s4,a1)", 1.0), ("y(s1,a2)", -1.0)),
    _row(("y(s5,a1)", 1.0), ("y(s3,a1)", -1.0)),
}

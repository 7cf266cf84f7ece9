"""Hot inner loops with a numba-compiled path and a vectorized numpy path.

The numba path is used when numba imports and the environment variable
``BILINPLAN_DISABLE_NUMBA`` is unset (or set to ``0``). Both paths make the
same pivot choices and the same floating point updates, so results agree to
rounding and usually bit for bit.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

ENV_FLAG = "BILINPLAN_DISABLE_NUMBA"

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def _flag_set(value: str | None) -> bool:
    return value is not None and value.strip().lower() not in ("", "0", "false", "no")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and not _flag_set(os.environ.get(ENV_FLAG))


# ---------------------------------------------------------------------------
# simplex pivoting on a dense tableau
#
# Layout: rows 0..m-1 are constraints, row m holds reduced costs d_j = z_j - c_j
# of a maximization problem, the last column is the right-hand side. Optimal
# when every allowed d_j >= -tol_cost.


def _simplex_py(T, basis, allowed, max_iter, bland_after, tol_cost, tol_piv):
    m = T.shape[0] - 1
    n = T.shape[1] - 1
    cost = T[m, :n]
    rhs_col = n
    degenerate = 0
    bland = False
    masked = np.where(allowed, 0.0, np.inf)
    it = 0
    while it < max_iter:
        d = cost + masked
        if bland:
            cand = np.flatnonzero(d < -tol_cost)
            if cand.size == 0:
                return OPTIMAL, it
            q = int(cand[0])
        else:
            q = int(np.argmin(d))
            if not d[q] < -tol_cost:
                return OPTIMAL, it
        col = T[:m, q]
        rows = np.flatnonzero(col > tol_piv)
        if rows.size == 0:
            return UNBOUNDED, it
        rhs = np.maximum(T[rows, rhs_col], 0.0)
        ratios = rhs / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + best)]
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(T[ties, q]))])
        if best <= tol_cost:
            degenerate += 1
            if degenerate > bland_after:
                bland = True
        prow = T[r] / T[r, q]
        T -= np.outer(T[:, q], prow)
        T[r] = prow
        basis[r] = q
        it += 1
    return ITERATION_LIMIT, it


def _simplex_loop(T, basis, allowed, max_iter, bland_after, tol_cost, tol_piv):
    m = T.shape[0] - 1
    n = T.shape[1] - 1
    degenerate = 0
    bland = False
    it = 0
    while it < max_iter:
        q = -1
        if bland:
            for j in range(n):
                if allowed[j] and T[m, j] < -tol_cost:
                    q = j
                    break
        else:
            best_d = np.inf
            for j in range(n):
                if allowed[j] and T[m, j] < best_d:
                    best_d = T[m, j]
                    q = j
            if q >= 0 and not best_d < -tol_cost:
                q = -1
        if q < 0:
            return OPTIMAL, it
        best = np.inf
        found = False
        for i in range(m):
            a = T[i, q]
            if a > tol_piv:
                rv = T[i, n]
                if rv < 0.0:
                    rv = 0.0
                ratio = rv / a
                if ratio < best:
                    best = ratio
                found = True
        if not found:
            return UNBOUNDED, it
        limit = best + 1e-12 * (1.0 + best)
        r = -1
        for i in range(m):
            a = T[i, q]
            if a > tol_piv:
                rv = T[i, n]
                if rv < 0.0:
                    rv = 0.0
                if rv / a <= limit:
                    if r < 0:
                        r = i
                    elif bland:
                        if basis[i] < basis[r]:
                            r = i
                    elif abs(a) > abs(T[r, q]):
                        r = i
        if best <= tol_cost:
            degenerate += 1
            if degenerate > bland_after:
                bland = True
        piv = T[r, q]
        for j in range(n + 1):
            T[r, j] = T[r, j] / piv
        for i in range(m + 1):
            if i != r:
                f = T[i, q]
                if f != 0.0:
                    for j in range(n + 1):
                        T[i, j] -= f * T[r, j]
        basis[r] = q
        it += 1
    return ITERATION_LIMIT, it


# ---------------------------------------------------------------------------
# LU factorization with partial pivoting, in place. Returns the permutation and
# the index of the first tiny pivot (-1 when the matrix is nonsingular).


def _lu_py(a, tol):
    n = a.shape[0]
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) < tol:
            return perm, k
        if p != k:
            a[[k, p]] = a[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        a[k + 1:, k] /= a[k, k]
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return perm, -1


def _lu_loop(a, tol):
    n = a.shape[0]
    perm = np.arange(n)
    for k in range(n):
        p = k
        big = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > big:
                big = v
                p = i
        if big < tol:
            return perm, k
        if p != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = tmp
            t = perm[k]
            perm[k] = perm[p]
            perm[p] = t
        for i in range(k + 1, n):
            a[i, k] = a[i, k] / a[k, k]
        for i in range(k + 1, n):
            f = a[i, k]
            for j in range(k + 1, n):
                a[i, j] -= f * a[k, j]
    return perm, -1


# ---------------------------------------------------------------------------
# cyclic Jacobi eigenvalue iteration on a symmetric matrix, in place.
# Returns the accumulated rotations and the number of sweeps.


def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
    if theta < 0.0:
        t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c


def _jacobi_py(a, max_sweeps, rel_tol):
    n = a.shape[0]
    v = np.eye(n)
    total = np.sqrt(np.sum(a * a))
    sweeps = 0
    if n < 2 or total == 0.0:
        return v, sweeps
    while sweeps < max_sweeps:
        off = np.sqrt(np.sum((a - np.diag(np.diag(a))) ** 2))
        if off <= rel_tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation(a[p, p], a[q, q], apq)
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweeps += 1
    return v, sweeps


def _jacobi_loop(a, max_sweeps, rel_tol):
    n = a.shape[0]
    v = np.eye(n)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += a[i, j] * a[i, j]
    total = np.sqrt(total)
    sweeps = 0
    if n < 2 or total == 0.0:
        return v, sweeps
    while sweeps < max_sweeps:
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if np.sqrt(off) <= rel_tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vp = v[k, p]
                    vq = v[k, q]
                    v[k, p] = c * vp - s * vq
                    v[k, q] = s * vp + c * vq
        sweeps += 1
    return v, sweeps


# ---------------------------------------------------------------------------
# occupancy propagation for a batch of deterministic policies through an
# acyclic transition graph. P has shape (states, actions, states), policies has
# shape (batch, states), order lists non-terminal states topologically.


def _occupancy_py(P, policies, alpha, order):
    d = np.tile(alpha, (policies.shape[0], 1))
    for s in order:
        acts = policies[:, s]
        d += d[:, s:s + 1] * P[s, acts, :]
    return d


def _occupancy_loop(P, policies, alpha, order):
    batch = policies.shape[0]
    ns = alpha.shape[0]
    d = np.empty((batch, ns))
    for b in range(batch):
        for s in range(ns):
            d[b, s] = alpha[s]
        for s in order:
            a = policies[b, s]
            ds = d[b, s]
            for t in range(ns):
                d[b, t] += ds * P[s, a, t]
    return d


# ---------------------------------------------------------------------------


class _Backend:
    def __init__(self, name, simplex, lu, jacobi, occupancy):
        self.name = name
        self.simplex = simplex
        self.lu = lu
        self.jacobi = jacobi
        self.occupancy = occupancy

    def __repr__(self):
        return f"<kernel backend {self.name}>"


numpy_backend = _Backend("numpy", _simplex_py, _lu_py, _jacobi_py, _occupancy_py)

if HAVE_NUMBA:
    _jit = numba.njit(cache=True)
    numba_backend = _Backend(
        "numba",
        _jit(_simplex_loop),
        _jit(_lu_loop),
        _jit(_jacobi_loop),
        _jit(_occupancy_loop),
    )
else:  # pragma: no cover
    numba_backend = None

backend = numba_backend if USING_NUMBA else numpy_backend


@contextmanager
def use_backend(name: str):
    """Temporarily route every kernel through ``numpy`` or ``numba``."""
    global backend
    chosen = {"numpy": numpy_backend, "numba": numba_backend}.get(name)
    if chosen is None:
        raise ValueError(f"backend {name!r} is not available")
    previous, backend = backend, chosen
    try:
        yield chosen
    finally:
        backend = previous


def run_simplex(T, basis, allowed, max_iter, bland_after, tol_cost=1e-9, tol_piv=1e-9):
    """Pivot ``T`` in place until optimal, unbounded or out of iterations."""
    status, iters = backend.simplex(
        T, basis, allowed, int(max_iter), int(bland_after), float(tol_cost), float(tol_piv)
    )
    return int(status), int(iters)


def lu_inplace(a, tol=1e-12):
    perm, bad = backend.lu(a, float(tol))
    return perm, int(bad)


def jacobi_inplace(a, max_sweeps=60, rel_tol=1e-14):
    v, sweeps = backend.jacobi(a, int(max_sweeps), float(rel_tol))
    return v, int(sweeps)


def propagate_occupancy(P, policies, alpha, order):
    return backend.occupancy(P, policies, alpha, order)

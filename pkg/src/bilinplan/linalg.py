"""Dense real linear algebra: LU solves, Jacobi eigendecomposition, SVD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NotSymmetric, SingularMatrix

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-8


def as_matrix(a) -> np.ndarray:
    m = np.array(a, dtype=float, ndmin=2)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class LUFactor:
    """Packed LU factors of ``P A = L U`` with unit lower triangular ``L``."""

    lu: np.ndarray
    perm: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatch(f"rhs has {b.shape[0]} rows, matrix has {self.n}")
        y = b[self.perm].copy()
        lu = self.lu
        for i in range(self.n):
            y[i] -= lu[i, :i] @ y[:i]
        for i in range(self.n - 1, -1, -1):
            y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
        return y

    def solve_transpose(self, b) -> np.ndarray:
        """Solve ``Aᵀ x = b`` with the same factors."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatch(f"rhs has {b.shape[0]} rows, matrix has {self.n}")
        lu = self.lu
        # Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ w = b, then Lᵀ v = w, then x = Pᵀ v.
        w = b.copy()
        for i in range(self.n):
            w[i] = (w[i] - lu[:i, i] @ w[:i]) / lu[i, i]
        for i in range(self.n - 1, -1, -1):
            w[i] -= lu[i + 1:, i] @ w[i + 1:]
        x = np.empty_like(w)
        x[self.perm] = w
        return x


def lu_factor(a) -> LUFactor:
    """Factor a square matrix with partial pivoting.

    Raises SingularMatrix when a pivot magnitude drops below 1e-12.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    work = np.ascontiguousarray(a, dtype=float).copy()
    perm, bad = _kernels.lu_inplace(work, PIVOT_TOL)
    if bad >= 0:
        raise SingularMatrix(f"pivot {bad} below {PIVOT_TOL:g}")
    return LUFactor(work, np.asarray(perm, dtype=np.int64))


def solve_linear(a, b) -> np.ndarray:
    """Solve ``A x = b`` for square nonsingular ``A``."""
    return lu_factor(a).solve(b)


def inverse(a) -> np.ndarray:
    a = as_matrix(a)
    return lu_factor(a).solve(np.eye(a.shape[0]))


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _fix_signs(v: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column positive."""
    if v.size == 0:
        return v
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def symmetric_eig(m) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues come back in descending order with unit eigenvector columns.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-10")
    work = np.ascontiguousarray(0.5 * (m + m.T))
    v, _ = _kernels.jacobi_inplace(work)
    lam = np.diag(work).copy()
    order = np.argsort(-lam, kind="stable")
    return EigenDecomposition(lam[order], _fix_signs(v[:, order]))


def complete_basis(q: np.ndarray, n: int) -> np.ndarray:
    """Extend orthonormal columns ``q`` (n × k) to an orthonormal basis of Rⁿ.

    The new columns come from Gram-Schmidt on the standard basis in index
    order, so the result is deterministic.
    """
    cols = [q[:, j] for j in range(q.shape[1])]
    for i in range(n):
        if len(cols) == n:
            break
        e = np.zeros(n)
        e[i] = 1.0
        for _ in range(2):
            for c in cols:
                e -= (c @ e) * c
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            cols.append(e / norm)
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def _svd_tall(m: np.ndarray):
    """SVD of an m × n matrix with n ≤ m via the n × n Gram matrix."""
    rows, cols = m.shape
    eig = symmetric_eig(m.T @ m)
    v = eig.eigenvectors
    mv = m @ v
    sigma = np.linalg.norm(mv, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, v, mv = sigma[order], v[:, order], mv[:, order]
    tiny = max(sigma[0], 1.0) * 1e-13 if cols else 0.0
    keep = sigma > tiny
    u = np.zeros((rows, cols))
    u[:, keep] = mv[:, keep] / sigma[keep]
    sigma[~keep] = 0.0
    k = int(np.count_nonzero(keep))
    if k < cols:
        # zero singular values: any orthonormal completion is valid
        full = complete_basis(u[:, :k], rows)
        u[:, k:] = full[:, k:cols]
    return u, sigma, v.T


def svd(m):
    """Thin singular value decomposition ``M = U diag(σ) Vt``.

    ``σ`` is descending and nonnegative, ``U`` is rows × r and ``Vt`` is
    r × cols with r = min(rows, cols). Rows and columns that are identically
    zero are stripped before the eigen step and restored afterwards.
    """
    m = as_matrix(m)
    rows, cols = m.shape
    r = min(rows, cols)
    if r == 0:
        return np.zeros((rows, 0)), np.zeros(0), np.zeros((0, cols))
    live_r = np.flatnonzero(np.any(m != 0.0, axis=1))
    live_c = np.flatnonzero(np.any(m != 0.0, axis=0))
    core = m[np.ix_(live_r, live_c)]
    if core.size:
        if core.shape[1] <= core.shape[0]:
            cu, cs, cvt = _svd_tall(core)
        else:
            cv, cs, cut = _svd_tall(core.T)
            cu, cvt = cut.T, cv.T
        k = len(cs)
    else:
        k = 0
    u = np.zeros((rows, r))
    v = np.zeros((cols, r))
    sigma = np.zeros(r)
    if k:
        u[live_r, :k] = cu
        v[live_c, :k] = cvt.T
        sigma[:k] = cs
    if k < r:
        u[:, k:] = complete_basis(u[:, :k], rows)[:, k:r]
        v[:, k:] = complete_basis(v[:, :k], cols)[:, k:r]
    return u, sigma, v.T


def spectral_norm(m) -> float:
    """Largest singular value (0 for an empty or zero matrix)."""
    m = as_matrix(m)
    if m.size == 0 or not np.any(m):
        return 0.0
    return float(svd(m)[1][0])

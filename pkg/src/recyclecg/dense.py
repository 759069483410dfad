"""Small dense linear algebra on n x k tall blocks and k x k symmetric matrices.

Tall blocks (error bases, auxiliary matrices) are plain ``(n, k)`` float
arrays in Fortran order so each column is contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSPDError

SMALL_DIM_CAP = 128
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_tall(V, n=None) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    if n is not None and V.shape[0] != n:
        raise ValueError(f"expected {n} rows, got {V.shape[0]}")
    if not np.all(np.isfinite(V)):
        raise ValueError("tall block contains non-finite entries")
    return np.asfortranarray(V)


def empty_tall(n: int) -> np.ndarray:
    return np.zeros((n, 0), order="F")


def mgs_orthonormalize(V, drop_tol: float = 1e-12) -> np.ndarray:
    """Orthonormalize the columns of ``V`` with modified Gram-Schmidt.

    A column is dropped when what remains after projecting out the
    earlier survivors is at most ``drop_tol`` times its original norm.
    Each column gets a second projection sweep; a single sweep loses
    orthogonality on the nearly dependent error vectors this is fed.
    """
    if not 0.0 < drop_tol < 1.0:
        raise ValueError("drop_tol must lie in (0, 1)")
    V = as_tall(V)
    kept = []
    for j in range(V.shape[1]):
        v = V[:, j].copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            continue
        for _ in range(2):
            for q in kept:
                v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > drop_tol * norm0:
            kept.append(v / norm)
    if not kept:
        return empty_tall(V.shape[0])
    return np.asfortranarray(np.column_stack(kept))


def _fix_signs(vectors):
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, j] = -col
    return vectors


def sym_eig(S, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` with ascending values and orthonormal
    columns; each vector is signed so its largest-magnitude entry is
    positive.
    """
    a = np.array(S, dtype=np.float64)
    k = a.shape[0]
    if a.shape != (k, k):
        raise ValueError("sym_eig needs a square matrix")
    if k > SMALL_DIM_CAP:
        raise ValueError(f"dimension {k} exceeds the small-matrix cap {SMALL_DIM_CAP}")
    scale = np.linalg.norm(a)
    if k and not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(scale, np.finfo(float).tiny)):
        raise ValueError("sym_eig needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    v = np.eye(k)
    threshold = tol * scale

    def off_norm():
        return np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))

    sweeps = 0
    while k > 1 and off_norm() > threshold:
        if sweeps == max_sweeps:
            raise ArithmeticError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(h):
                    # tau*tau would overflow; tan of the rotation angle is apq/h here
                    t = apq / h
                else:
                    tau = h / (2.0 * apq)
                    t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], _fix_signs(v[:, order])


@dataclass(frozen=True)
class SmallChol:
    """Lower Cholesky factor ``L`` of a small SPD matrix."""

    L: np.ndarray

    @property
    def k(self) -> int:
        return self.L.shape[0]


def chol_factor(S) -> SmallChol:
    S = np.asarray(S, dtype=np.float64)
    k = S.shape[0]
    L = np.zeros((k, k))
    for j in range(k):
        pivot = S[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0.0:
            raise NotSPDError(f"W^T A W not SPD (pivot {j} = {pivot:.3e})")
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (S[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return SmallChol(L)


def chol_solve(C: SmallChol, f) -> np.ndarray:
    L = C.L
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (C.k,):
        raise ValueError(f"dimension mismatch: factor is {C.k}x{C.k}, rhs has shape {f.shape}")
    y = np.empty(C.k)
    for i in range(C.k):
        y[i] = (f[i] - L[i, :i] @ y[:i]) / L[i, i]
    u = np.empty(C.k)
    for i in range(C.k - 1, -1, -1):
        u[i] = (y[i] - L[i + 1:, i] @ u[i + 1:]) / L[i, i]
    return u


def tall_apply(W, u) -> np.ndarray:
    """W @ u for a tall block W."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (W.shape[1],):
        raise ValueError(f"dimension mismatch: block has {W.shape[1]} columns, vector {u.shape}")
    if W.shape[1] == 0:
        return np.zeros(W.shape[0])
    return W @ u


def tall_t_apply(W, y) -> np.ndarray:
    """W^T @ y for a tall block W."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (W.shape[0],):
        raise ValueError(f"dimension mismatch: block has {W.shape[0]} rows, vector {y.shape}")
    return W.T @ y

"""Incomplete Cholesky IC(0) and the additive subspace-correction preconditioner.

Preconditioners are callables ``z = M(r)`` returning ``M^{-1} r``.
``None`` stands for the identity wherever a preconditioner is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .dense import SmallChol, as_tall, chol_factor, chol_solve, tall_apply, tall_t_apply
from .errors import ICBreakdown
from .sparse import CsrMatrix

FIRST_SHIFT = 0.01
MAX_SHIFT_RETRIES = 20


@numba.njit(cache=True)
def _ic0_kernel(n, row_start, col_index, values, diag, l_vals, d):
    # Row-oriented LDL^T restricted to the strictly-lower pattern.
    # Returns -1 on success, else the row whose pivot broke down.
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        lo, hi = row_start[i], row_start[i + 1]
        for t in range(lo, hi):
            pos[col_index[t]] = t
        for t in range(lo, hi):
            k = col_index[t]
            acc = values[t]
            for u in range(row_start[k], row_start[k + 1]):
                j = col_index[u]
                pj = pos[j]
                if pj >= 0:
                    acc -= l_vals[pj] * d[j] * l_vals[u]
            l_vals[t] = acc / d[k]
        piv = diag[i]
        for t in range(lo, hi):
            piv -= l_vals[t] * l_vals[t] * d[col_index[t]]
        for t in range(lo, hi):
            pos[col_index[t]] = -1
        if not piv > 0.0:
            return i
        d[i] = piv
    return -1


@numba.njit(cache=True)
def _ldlt_solve_kernel(row_start, col_index, l_vals, d, r, z):
    n = d.shape[0]
    for i in range(n):
        acc = r[i]
        for t in range(row_start[i], row_start[i + 1]):
            acc -= l_vals[t] * z[col_index[t]]
        z[i] = acc
    for i in range(n):
        z[i] /= d[i]
    for i in range(n - 1, -1, -1):
        zi = z[i]
        for t in range(row_start[i], row_start[i + 1]):
            z[col_index[t]] -= l_vals[t] * zi


def even_blocks(n: int, count: int):
    """Partition ``range(n)`` into ``count`` contiguous near-equal row ranges."""
    if count < 1:
        raise ValueError("block count must be >= 1")
    count = min(count, n)
    edges = np.linspace(0, n, count + 1).round().astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass(frozen=True, eq=False)
class IcFactor:
    """Unit-lower factor ``L`` (strict part, CSR) and diagonal ``d`` of L d L^T."""

    row_start: np.ndarray
    col_index: np.ndarray
    l_values: np.ndarray
    d: np.ndarray
    blocks: list
    shift: float = 0.0

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __call__(self, r):
        return ic_apply(self, r)

    def lower_dense(self) -> np.ndarray:
        """Unit lower-triangular L as a dense array (for tests and inspection)."""
        L = np.eye(self.n)
        rows = np.repeat(np.arange(self.n), np.diff(self.row_start))
        L[rows, self.col_index] = self.l_values
        return L


def _strict_lower(A: CsrMatrix, blocks):
    rows = A.row_ids()
    block_of = np.empty(A.n, dtype=np.int64)
    for b, (lo, hi) in enumerate(blocks):
        block_of[lo:hi] = b
    keep = (A.col_index < rows) & (block_of[A.col_index] == block_of[rows])
    row_start = np.zeros(A.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows[keep], minlength=A.n), out=row_start[1:])
    return row_start, A.col_index[keep].copy(), A.values[keep].copy()


def ic0_factorize(A: CsrMatrix, shift: float = 0.0, blocks: int = 1) -> IcFactor:
    """Zero fill-in incomplete Cholesky of ``A + shift * diag(A)``.

    With ``blocks > 1`` the factorization is block-Jacobi: couplings
    between the contiguous row blocks are discarded. A non-positive pivot
    triggers retries with the shift set to 0.01 and doubled each time.
    """
    if shift < 0:
        raise ValueError("shift must be >= 0")
    ranges = even_blocks(A.n, blocks)
    row_start, col_index, low_vals = _strict_lower(A, ranges)
    diag = A.diagonal()

    retries = 0
    while True:
        l_vals = np.empty_like(low_vals)
        d = np.empty(A.n)
        bad = _ic0_kernel(A.n, row_start, col_index, low_vals, diag * (1.0 + shift), l_vals, d)
        if bad < 0:
            return IcFactor(row_start, col_index, l_vals, d, ranges, shift)
        if retries == MAX_SHIFT_RETRIES:
            raise ICBreakdown(f"IC breakdown: pivot {bad} non-positive with shift {shift:g}")
        retries += 1
        shift = FIRST_SHIFT if shift == 0.0 else 2.0 * shift


def ic_apply(F: IcFactor, r) -> np.ndarray:
    """z = (L d L^T)^{-1} r by forward substitution, diagonal scaling, back substitution."""
    r = np.ascontiguousarray(r, dtype=np.float64)
    if r.shape != (F.n,):
        raise ValueError(f"dimension mismatch: factor is {F.n}x{F.n}, vector has shape {r.shape}")
    z = np.empty(F.n)
    _ldlt_solve_kernel(F.row_start, F.col_index, F.l_values, F.d, r, z)
    return z


def identity(r):
    return np.array(r, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class ScOperator:
    """Additive coarse correction: M^{-1} + W (W^T A W)^{-1} W^T."""

    inner: object
    W: np.ndarray
    AW: np.ndarray
    waw_chol: SmallChol = field(repr=False)

    def __call__(self, r):
        return sc_apply(self, r)

    @property
    def k(self) -> int:
        return self.W.shape[1]


def make_sc_operator(A: CsrMatrix, W, inner=None, AW=None) -> ScOperator:
    W = as_tall(W, A.n)
    AW = A @ W if AW is None else as_tall(AW, A.n)
    if W.shape != AW.shape:
        raise ValueError("W and AW must have the same shape")
    if W.shape[1]:
        ref = A @ W
        if np.max(np.abs(ref - AW)) > 1e-12 * max(np.max(np.abs(ref)), 1e-300):
            raise ValueError("AW does not match A @ W")
    return ScOperator(inner, W, np.asfortranarray(AW), chol_factor(W.T @ AW))


def sc_apply(op: ScOperator, r) -> np.ndarray:
    z = identity(r) if op.inner is None else op.inner(r)
    if op.k == 0:
        return z
    return z + tall_apply(op.W, chol_solve(op.waw_chol, tall_t_apply(op.W, r)))


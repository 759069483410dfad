"""CSR storage, Matrix Market I/O, diagonal scaling and the SpMV kernels.

Matrices are stored in full symmetric form (both triangles), 0-based,
with columns sorted inside each row.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numba
import numpy as np

from .errors import MatrixMarketError, NotSPDError

SYMMETRY_RTOL = 1e-12


@numba.njit(cache=True)
def _spmv_kernel(row_start, col_index, values, x, y):
    n = row_start.shape[0] - 1
    for i in range(n):
        acc = 0.0
        for k in range(row_start[i], row_start[i + 1]):
            acc += values[k] * x[col_index[k]]
        y[i] = acc


@numba.njit(cache=True)
def _spmv_dual_kernel(row_start, col_index, values, x1, x2, y1, y2):
    n = row_start.shape[0] - 1
    for i in range(n):
        acc1 = 0.0
        acc2 = 0.0
        for k in range(row_start[i], row_start[i + 1]):
            a = values[k]
            j = col_index[k]
            acc1 += a * x1[j]
            acc2 += a * x2[j]
        y1[i] = acc1
        y2[i] = acc2


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Square sparse matrix in compressed-sparse-row form.

    The constructor checks the structural invariants: monotone row
    pointer, strictly increasing in-range columns per row, numerical
    symmetry of the stored entries, and a strictly positive diagonal.
    Pass ``check=False`` only for matrices derived from an already
    checked one.
    """

    row_start: np.ndarray
    col_index: np.ndarray
    values: np.ndarray
    check: bool = True

    def __post_init__(self):
        rs = np.ascontiguousarray(self.row_start, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_index, dtype=np.int64)
        va = np.ascontiguousarray(self.values, dtype=np.float64)
        for arr in (rs, ci, va):
            arr.setflags(write=False)
        object.__setattr__(self, "row_start", rs)
        object.__setattr__(self, "col_index", ci)
        object.__setattr__(self, "values", va)
        if self.check:
            _validate(rs, ci, va)

    @property
    def n(self) -> int:
        return self.row_start.shape[0] - 1

    @property
    def nnz(self) -> int:
        return int(self.row_start[-1])

    @property
    def nnz_av(self) -> float:
        return self.nnz / self.n

    @property
    def shape(self):
        return (self.n, self.n)

    def diagonal(self) -> np.ndarray:
        rows = self.row_ids()
        d = np.zeros(self.n)
        on = rows == self.col_index
        d[rows[on]] = self.values[on]
        return d

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_start))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.nnz else 0.0

    def __matmul__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            return np.column_stack([spmv(self, x[:, j]) for j in range(x.shape[1])]) \
                if x.shape[1] else np.zeros((self.n, 0))
        return spmv(self, x)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.row_ids(), self.col_index] = self.values
        return out

    @classmethod
    def from_dense(cls, a, tol=0.0) -> "CsrMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square 2-D array, got shape {a.shape}")
        mask = np.abs(a) > tol
        np.fill_diagonal(mask, True)
        rows, cols = np.nonzero(mask)
        row_start = np.zeros(a.shape[0] + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=a.shape[0]), out=row_start[1:])
        return cls(row_start, cols, a[rows, cols])

    @classmethod
    def from_coo(cls, n, rows, cols, vals) -> "CsrMatrix":
        """Build from coordinate triples; duplicates are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            first = np.ones(rows.size, dtype=bool)
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(first)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        row_start = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=row_start[1:])
        return cls(row_start, cols, vals)


def _validate(rs, ci, va):
    if rs.ndim != 1 or rs.size < 1 or rs[0] != 0:
        raise ValueError("row_start must be a 1-D array starting at 0")
    n = rs.size - 1
    if np.any(np.diff(rs) < 0):
        raise ValueError("row_start must be non-decreasing")
    if rs[-1] != ci.size or ci.size != va.size:
        raise ValueError("row_start[n] must equal nnz = len(col_index) = len(values)")
    if ci.size and (ci.min() < 0 or ci.max() >= n):
        raise ValueError("column index out of range")
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(rs))
    same_row = rows[1:] == rows[:-1]
    if np.any(ci[1:][same_row] <= ci[:-1][same_row]):
        raise ValueError("columns must be strictly increasing within each row")
    if not np.all(np.isfinite(va)):
        raise ValueError("matrix contains non-finite values")
    # transpose in CSR order must reproduce the pattern and values
    order = np.lexsort((rows, ci))
    if not (np.array_equal(ci[order], rows) and np.array_equal(rows[order], ci)):
        raise NotSPDError("matrix pattern is not symmetric")
    vt = va[order]
    scale = np.maximum(np.abs(va), np.abs(vt))
    bad = np.abs(va - vt) > SYMMETRY_RTOL * scale
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise NotSPDError(f"matrix is not symmetric at entry ({rows[k]}, {ci[k]})")
    diag = np.zeros(n)
    on = rows == ci
    diag[rows[on]] = va[on]
    has = np.zeros(n, dtype=bool)
    has[rows[on]] = True
    bad_rows = np.flatnonzero(~has | (diag <= 0))
    if bad_rows.size:
        raise NotSPDError(f"diagonal entry of row {bad_rows[0]} is missing or non-positive")


def spmv(A: CsrMatrix, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (A.n,):
        raise ValueError(f"dimension mismatch: matrix is {A.n}x{A.n}, vector has shape {x.shape}")
    y = np.empty(A.n)
    _spmv_kernel(A.row_start, A.col_index, A.values, x, y)
    return y


def spmv_dual(A: CsrMatrix, x1, x2):
    """Two products with one pass over the matrix entries."""
    x1 = np.ascontiguousarray(x1, dtype=np.float64)
    x2 = np.ascontiguousarray(x2, dtype=np.float64)
    if x1.shape != (A.n,) or x2.shape != (A.n,):
        raise ValueError(f"dimension mismatch: matrix is {A.n}x{A.n}, "
                         f"vectors have shapes {x1.shape} and {x2.shape}")
    y1 = np.empty(A.n)
    y2 = np.empty(A.n)
    _spmv_dual_kernel(A.row_start, A.col_index, A.values, x1, x2, y1, y2)
    return y1, y2


def diagonal_scale(A: CsrMatrix):
    """Symmetric scaling D^{-1/2} A D^{-1/2}.

    Returns the scaled matrix and the vector ``d_inv_sqrt`` with entries
    1/sqrt(a_ii) of the original matrix.
    """
    diag = A.diagonal()
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        raise NotSPDError(f"non-positive diagonal entry in row {bad[0]}")
    d_inv_sqrt = 1.0 / np.sqrt(diag)
    rows = A.row_ids()
    vals = A.values * d_inv_sqrt[rows] * d_inv_sqrt[A.col_index]
    vals[rows == A.col_index] = 1.0
    return CsrMatrix(A.row_start, A.col_index, vals, check=False), d_inv_sqrt


def gen_laplacian_2d(N: int) -> CsrMatrix:
    """5-point Dirichlet Laplacian on an N x N grid (diagonal 4, neighbours -1)."""
    if N < 1:
        raise ValueError("grid side N must be >= 1")
    rows, cols, vals = [], [], []
    for gy in range(N):
        for gx in range(N):
            i = gy * N + gx
            for j, v in ((i - N, -1.0), (i - 1, -1.0), (i, 4.0), (i + 1, -1.0), (i + N, -1.0)):
                if j == i - N and gy == 0 or j == i + N and gy == N - 1:
                    continue
                if j == i - 1 and gx == 0 or j == i + 1 and gx == N - 1:
                    continue
                rows.append(i)
                cols.append(j)
                vals.append(v)
    return CsrMatrix.from_coo(N * N, rows, cols, vals)


# ---------------------------------------------------------------------------
# Matrix Market

_SUPPORTED_FIELDS = ("real", "integer")
_SUPPORTED_SYMMETRY = ("symmetric", "general")


def parse_matrix_market(stream) -> CsrMatrix:
    """Parse a Matrix Market coordinate file into full-storage CSR.

    ``stream`` is a text stream or a string holding the file contents.
    Symmetric input is mirrored and duplicate coordinates are summed.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = iter(enumerate(stream, start=1))

    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MatrixMarketError("empty input", 1) from None
    tokens = header.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != "%%matrixmarket":
        raise MatrixMarketError(f"malformed header {header.strip()!r}", lineno)
    _, obj, fmt, field, symmetry = tokens
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"only 'matrix coordinate' is supported, got {obj} {fmt}", lineno)
    if field not in _SUPPORTED_FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}", lineno)
    if symmetry not in _SUPPORTED_SYMMETRY:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", lineno)

    size = None
    for lineno, line in lines:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        size = (lineno, s.split())
        break
    if size is None:
        raise MatrixMarketError("missing size line", lineno)
    lineno, parts = size
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError:
        raise MatrixMarketError(f"malformed size line {' '.join(parts)!r}", lineno) from None
    if nrows != ncols:
        raise MatrixMarketError(f"matrix is not square ({nrows} x {ncols})", lineno)
    if nrows < 1 or nnz < 0:
        raise MatrixMarketError("invalid dimensions", lineno)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    k = 0
    for lineno, line in lines:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        if k >= nnz:
            raise MatrixMarketError(f"more entries than the declared {nnz}", lineno)
        parts = s.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"expected 'row col value', got {s!r}", lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry {s!r}", lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(f"index ({i}, {j}) outside declared {nrows} x {ncols}", lineno)
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, found {k}", lineno)

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate((rows, cols[off])),
                            np.concatenate((cols, rows[off])),
                            np.concatenate((vals, vals[off])))
    return CsrMatrix.from_coo(nrows, rows, cols, vals)


def read_matrix_market(path) -> CsrMatrix:
    with open(path, "r") as fh:
        return parse_matrix_market(fh)


def write_matrix_market(A: CsrMatrix, path, symmetric=False):
    """Write ``A`` in coordinate format; ``symmetric`` stores the lower triangle only."""
    rows = A.row_ids()
    cols, vals = A.col_index, A.values
    if symmetric:
        keep = cols <= rows
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    kind = "symmetric" if symmetric else "general"
    with open(os.fspath(path), "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {kind}\n")
        fh.write(f"{A.n} {A.n} {rows.size}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")

"""Compressed sparse row storage, pencils, shifted systems and RCM ordering.

The CSR container is a thin immutable record over three numpy arrays. The
matrix-vector product is delegated to ``scipy.sparse`` (zero-copy view of the
same arrays); everything else in the package only ever sees :class:`CsrMatrix`.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CsrMatrix",
    "MatrixPencil",
    "Permutation",
    "SpmvCounter",
    "ShiftedPattern",
    "spmv",
    "shifted_pencil",
    "rcm_order",
    "bandwidth",
    "DimensionError",
]


class DimensionError(ValueError):
    """Raised when operand shapes do not conform."""


class SpmvCounter:
    """Thread-safe tally of sparse matrix-vector products."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, k=1):
        with self._lock:
            self._count += k

    @property
    def count(self):
        return self._count

    def reset(self):
        with self._lock:
            self._count = 0


class CsrMatrix:
    """Immutable CSR matrix over float64 or complex128.

    Parameters
    ----------
    nrows, ncols : int
    row_ptr : array_like of int, length ``nrows + 1``
    col_idx : array_like of int
    values : array_like, same length as ``col_idx``
    check : bool
        Validate the structural invariants (sorted, unique, in-range columns).
    """

    __slots__ = ("nrows", "ncols", "row_ptr", "col_idx", "values", "_sp")

    def __init__(self, nrows, ncols, row_ptr, col_idx, values, check=True):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
        values = np.asarray(values)
        if np.iscomplexobj(values):
            values = np.ascontiguousarray(values, dtype=np.complex128)
        else:
            values = np.ascontiguousarray(values, dtype=np.float64)
        self.values = values
        for a in (self.row_ptr, self.col_idx, self.values):
            a.flags.writeable = False
        self._sp = None
        if check:
            self._validate()

    def _validate(self):
        rp, ci = self.row_ptr, self.col_idx
        if rp.shape != (self.nrows + 1,):
            raise ValueError("row_ptr must have length nrows + 1")
        if rp[0] != 0 or rp[-1] != ci.size or ci.size != self.values.size:
            raise ValueError("row_ptr endpoints inconsistent with col_idx/values")
        if np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.ncols:
                raise ValueError("column index out of range")
            d = np.diff(ci)
            # a decrease is only allowed where a new row starts
            starts = np.zeros(ci.size, dtype=bool)
            starts[rp[1:-1][rp[1:-1] < ci.size]] = True
            if np.any((d <= 0) & ~starts[1:]):
                raise ValueError("column indices must be strictly increasing within a row")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a, keep_zeros=False):
        a = np.asarray(a)
        if keep_zeros:
            rows, cols = np.indices(a.shape)
            rows, cols = rows.ravel(), cols.ravel()
        else:
            rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, vals):
        """Build from triplets; duplicates are summed, explicit zeros kept."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            keep = np.ones(rows.size, dtype=bool)
            keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(keep) - 1
            summed = np.zeros(keep.sum(), dtype=vals.dtype)
            np.add.at(summed, group, vals)
            rows, cols, vals = rows[keep], cols[keep], summed
        row_ptr = np.zeros(nrows + 1, dtype=np.int64)
        np.add.at(row_ptr, rows + 1, 1)
        return cls(nrows, ncols, np.cumsum(row_ptr), cols, vals)

    @classmethod
    def identity(cls, n, dtype=np.float64):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n, dtype=dtype))

    @classmethod
    def diag(cls, d):
        d = np.asarray(d)
        n = d.size
        return cls(n, n, np.arange(n + 1), np.arange(n), d)

    # -- views ------------------------------------------------------------

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        return int(self.col_idx.size)

    @property
    def dtype(self):
        return self.values.dtype

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    def to_scipy(self):
        if self._sp is None:
            self._sp = sp.csr_matrix(
                (self.values, self.col_idx, self.row_ptr), shape=self.shape
            )
        return self._sp

    def to_dense(self):
        out = np.zeros(self.shape, dtype=self.values.dtype)
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_ptr))
        out[rows, self.col_idx] = self.values
        return out

    def row(self, i):
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_idx[lo:hi], self.values[lo:hi]

    def diagonal(self):
        d = np.zeros(min(self.shape), dtype=self.values.dtype)
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_ptr))
        on = rows == self.col_idx
        d[rows[on]] = self.values[on]
        return d

    def transpose(self):
        return CsrMatrix.from_scipy(self.to_scipy().T)

    def conj(self):
        return CsrMatrix(self.nrows, self.ncols, self.row_ptr, self.col_idx,
                         np.conj(self.values), check=False)

    def astype(self, dtype):
        return CsrMatrix(self.nrows, self.ncols, self.row_ptr, self.col_idx,
                         self.values.astype(dtype), check=False)

    def prune(self):
        """Drop explicitly stored zeros."""
        keep = self.values != 0
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_ptr))[keep]
        row_ptr = np.zeros(self.nrows + 1, dtype=np.int64)
        np.add.at(row_ptr, rows + 1, 1)
        return CsrMatrix(self.nrows, self.ncols, np.cumsum(row_ptr),
                         self.col_idx[keep], self.values[keep], check=False)

    def is_symmetric(self, tol=0.0):
        if self.nrows != self.ncols:
            return False
        d = self.to_scipy() - self.to_scipy().T
        if d.nnz == 0:
            return True
        return bool(np.max(np.abs(d.data)) <= tol)

    def permute(self, perm):
        """Symmetric permutation ``P M P^T`` (row/col ``perm[k]`` moves to ``k``)."""
        p = perm.perm if isinstance(perm, Permutation) else np.asarray(perm)
        m = self.to_scipy()[p][:, p]
        return CsrMatrix.from_scipy(m)

    def __matmul__(self, x):
        return spmv(self, x)

    def __repr__(self):
        return f"CsrMatrix({self.nrows}x{self.ncols}, nnz={self.nnz}, dtype={self.dtype})"


def spmv(M, x, counter=None):
    """Return ``M @ x`` for a vector or an ``n x k`` block.

    A block counts as ``k`` products on ``counter``.
    """
    x = np.asarray(x)
    if x.shape[0] != M.ncols:
        raise DimensionError(f"spmv: matrix has {M.ncols} columns, vector has {x.shape[0]}")
    if counter is not None:
        counter.add(1 if x.ndim == 1 else x.shape[1])
    return M.to_scipy() @ x


@dataclass(frozen=True)
class Permutation:
    """Bijection on ``{0..n-1}``; ``perm[k]`` is the old index placed at ``k``."""

    perm: np.ndarray
    inverse: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.perm, dtype=np.int64)
        inv = np.empty_like(p)
        inv[p] = np.arange(p.size)
        if p.size and (p.min() < 0 or p.max() >= p.size or
                       np.any(np.bincount(p, minlength=p.size) != 1)):
            raise ValueError("not a permutation")
        object.__setattr__(self, "perm", p)
        object.__setattr__(self, "inverse", inv)

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n))

    def __len__(self):
        return self.perm.size

    def apply(self, x):
        """Old ordering -> new ordering."""
        return np.asarray(x)[self.perm]

    def unapply(self, y):
        """New ordering -> old ordering."""
        return np.asarray(y)[self.inverse]


@dataclass(frozen=True)
class MatrixPencil:
    A: CsrMatrix
    B: CsrMatrix
    b_definite: bool = True

    def __post_init__(self):
        if self.A.shape != self.B.shape or self.A.nrows != self.A.ncols:
            raise DimensionError("pencil matrices must be square and of equal size")

    @property
    def n(self):
        return self.A.nrows


class ShiftedPattern:
    """Union sparsity pattern of a pencil, reused for every shift.

    ``values(sigma)`` returns the entries of ``A - sigma*B`` laid out on the
    union pattern.
    """

    def __init__(self, pencil):
        A, B = pencil.A, pencil.B
        n = A.nrows
        pat = (abs(A.to_scipy()) + abs(B.to_scipy())).tocsr()
        pat.sort_indices()
        self.n = n
        self.row_ptr = pat.indptr.astype(np.int64)
        self.col_idx = pat.indices.astype(np.int64)
        self.a_vals = self._scatter(A)
        self.b_vals = self._scatter(B)

    def _scatter(self, M):
        out = np.zeros(self.col_idx.size, dtype=M.values.dtype)
        rows_u = np.repeat(np.arange(self.n), np.diff(self.row_ptr))
        key_u = rows_u * self.n + self.col_idx
        rows_m = np.repeat(np.arange(self.n), np.diff(M.row_ptr))
        key_m = rows_m * self.n + M.col_idx
        out[np.searchsorted(key_u, key_m)] = M.values
        return out

    def values(self, sigma):
        return self.a_vals - sigma * self.b_vals

    def matrix(self, sigma):
        vals = self.values(sigma)
        if np.iscomplexobj(vals) or isinstance(sigma, complex):
            vals = vals.astype(np.complex128)
        return CsrMatrix(self.n, self.n, self.row_ptr, self.col_idx, vals, check=False)


def shifted_pencil(pencil, sigma, pattern=None):
    """Return ``A - sigma*B`` as a complex CSR on the union pattern."""
    if pattern is None:
        pattern = ShiftedPattern(pencil)
    return pattern.matrix(complex(sigma))


def bandwidth(M):
    """Maximum ``|i - j|`` over stored entries."""
    if M.nnz == 0:
        return 0
    rows = np.repeat(np.arange(M.nrows), np.diff(M.row_ptr))
    return int(np.max(np.abs(rows - M.col_idx)))


def _adjacency(M):
    s = M.to_scipy()
    g = (abs(s) + abs(s.T)).tocsr()
    g.setdiag(0)
    g.eliminate_zeros()
    g.sort_indices()
    return g.indptr, g.indices


def _bfs_levels(start, indptr, indices, degree, visited):
    """Cuthill-McKee BFS from ``start``; neighbours queued by increasing degree."""
    order = [start]
    visited[start] = True
    level = {start: 0}
    q = deque([start])
    while q:
        u = q.popleft()
        nbrs = indices[indptr[u]:indptr[u + 1]]
        nbrs = nbrs[~visited[nbrs]]
        if nbrs.size:
            nbrs = nbrs[np.lexsort((nbrs, degree[nbrs]))]
            visited[nbrs] = True
            for v in nbrs:
                level[int(v)] = level[u] + 1
                order.append(int(v))
                q.append(int(v))
    return order, level


def _pseudo_peripheral(start, indptr, indices, degree, n):
    """George-Liu search for a node of (near) maximal eccentricity."""
    node = start
    ecc = -1
    while True:
        visited = np.zeros(n, dtype=bool)
        order, level = _bfs_levels(node, indptr, indices, degree, visited)
        depth = max(level.values())
        if depth <= ecc:
            return node
        ecc = depth
        last = [v for v in order if level[v] == depth]
        node = min(last, key=lambda v: (degree[v], v))


def rcm_order(pattern):
    """Reverse Cuthill-McKee ordering of the symmetrised pattern of ``pattern``.

    Disconnected components are ordered one after another, each started from a
    pseudo-peripheral node of minimum degree.
    """
    n = pattern.nrows
    indptr, indices = _adjacency(pattern)
    degree = np.diff(indptr)
    visited = np.zeros(n, dtype=bool)
    order = []
    for seed in np.lexsort((np.arange(n), degree)):
        if visited[seed]:
            continue
        # restrict the peripheral search to this component
        comp_vis = visited.copy()
        comp, _ = _bfs_levels(int(seed), indptr, indices, degree, comp_vis)
        start = _pseudo_peripheral(int(seed), indptr, indices, degree, n)
        if start not in set(comp):
            start = int(seed)
        part, _ = _bfs_levels(start, indptr, indices, degree, visited)
        order.extend(part)
    return Permutation(np.asarray(order[::-1], dtype=np.int64))

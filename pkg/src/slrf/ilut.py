"""Threshold incomplete LU (ILUT) without pivoting.

Row-wise IKJ elimination in the style of Saad's ILUT. While eliminating row
``i`` the working entry ``w_k`` is discarded when ``|w_k| < droptol * ||a_i||_2``
(tested before division by ``u_kk``, so the rule is invariant under scaling
of the matrix) and, after elimination, the remaining off-diagonal entries of
the working row are filtered by the same threshold.
The diagonal is never dropped. An optional ``fill_cap`` keeps only the
largest entries in each of the L and U parts of a row.
"""

import heapq
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse.linalg import spsolve_triangular

from .sparse import CsrMatrix

__all__ = ["IlutFactors", "IlutBreakdown", "ilut_factorize", "ilut_apply"]

_TINY = np.finfo(float).tiny


class IlutBreakdown(ArithmeticError):
    """Zero (or subnormal) pivot during factorization."""

    def __init__(self, row, pivot):
        super().__init__(f"ILUT breakdown: pivot {pivot!r} in row {row}")
        self.row = row
        self.pivot = pivot


@dataclass(frozen=True)
class IlutFactors:
    """``M ~= L U`` with ``L`` unit lower triangular (unit diagonal stored)."""

    L: CsrMatrix
    U: CsrMatrix
    droptol: float
    fill_cap: Optional[int] = None

    @property
    def n(self):
        return self.L.nrows

    @property
    def nnz(self):
        return self.L.nnz + self.U.nnz


def _cap(cols, vals, p):
    if p is None or cols.size <= p:
        return cols, vals
    keep = np.sort(np.argsort(-np.abs(vals), kind="stable")[:p])
    return cols[keep], vals[keep]


def ilut_factorize(M, droptol=1e-4, fill_cap=None):
    """Compute ILUT factors of a square CSR matrix.

    Parameters
    ----------
    M : CsrMatrix
        Real or complex; the factors are complex.
    droptol : float
        Relative drop tolerance; ``0`` gives the exact LU (no pivoting),
        ``inf`` keeps only the diagonal of ``U``.
    fill_cap : int, optional
        Maximum number of off-diagonal entries kept in each of the L and U
        parts of a row.

    Raises
    ------
    IlutBreakdown
        If a pivot is zero or subnormal.
    """
    n = M.nrows
    if M.ncols != n:
        raise ValueError("ILUT needs a square matrix")
    w = np.zeros(n, dtype=np.complex128)
    used = np.zeros(n, dtype=bool)
    u_rows = [None] * n   # (cols > i, vals) for each finished row
    u_diag = np.zeros(n, dtype=np.complex128)
    l_cols, l_vals, u_cols, u_vals = [], [], [], []

    for i in range(n):
        cols, vals = M.row(i)
        tol = droptol * float(np.linalg.norm(vals)) if droptol > 0 else 0.0
        w[cols] = vals
        used[cols] = True
        nz = list(cols)
        lower = [int(c) for c in cols if c < i]
        heapq.heapify(lower)
        seen_lower = set(lower)
        while lower:
            k = heapq.heappop(lower)
            if abs(w[k]) < tol:
                w[k] = 0.0
                continue
            wk = w[k] / u_diag[k]
            w[k] = wk
            uc, uv = u_rows[k]
            if uc.size == 0:
                continue
            fresh = uc[~used[uc]]
            if fresh.size:
                used[fresh] = True
                nz.extend(fresh.tolist())
                for c in fresh[fresh < i].tolist():
                    if c not in seen_lower:
                        seen_lower.add(c)
                        heapq.heappush(lower, c)
            w[uc] -= wk * uv

        nz = np.array(sorted(nz), dtype=np.int64)
        vals = w[nz]
        w[nz] = 0.0
        used[nz] = False

        is_l = nz < i
        is_u = nz > i
        # L holds multipliers; test them in matrix units like the U part
        keep_l = is_l & (vals != 0) & (np.abs(vals * u_diag[nz]) >= tol)
        keep_u = is_u & (np.abs(vals) >= tol) & (vals != 0)
        lc, lv = _cap(nz[keep_l], vals[keep_l], fill_cap)
        uc, uv = _cap(nz[keep_u], vals[keep_u], fill_cap)

        piv = vals[nz == i]
        piv = piv[0] if piv.size else 0.0
        if abs(piv) <= _TINY:
            raise IlutBreakdown(i, complex(piv))
        u_diag[i] = piv
        u_rows[i] = (uc, uv)
        l_cols.append(np.append(lc, i))
        l_vals.append(np.append(lv, 1.0 + 0j))
        u_cols.append(np.insert(uc, 0, i))
        u_vals.append(np.insert(uv, 0, piv))

    return IlutFactors(_stack(n, l_cols, l_vals), _stack(n, u_cols, u_vals),
                       float(droptol), fill_cap)


def _stack(n, cols, vals):
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    row_ptr[1:] = np.cumsum([c.size for c in cols])
    return CsrMatrix(n, n, row_ptr, np.concatenate(cols), np.concatenate(vals).astype(np.complex128))


def ilut_apply(F, r, counter=None):
    """Return ``U^{-1} L^{-1} r`` by forward then backward substitution."""
    if counter is not None:
        counter.add()
    r = np.asarray(r, dtype=np.complex128)
    y = spsolve_triangular(F.L.to_scipy(), r, lower=True, unit_diagonal=True)
    return spsolve_triangular(F.U.to_scipy(), y, lower=False)

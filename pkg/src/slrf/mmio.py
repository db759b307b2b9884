"""Matrix Market reader/writer for :class:`~slrf.sparse.CsrMatrix` and vectors.

Supports the ``coordinate`` and ``array`` formats with ``real``, ``complex``,
``integer`` and ``pattern`` fields and ``general`` / ``symmetric`` symmetry.
Values are written with ``repr`` so a round trip is bit-exact.
"""

import warnings

import numpy as np

from .sparse import CsrMatrix

__all__ = ["MatrixMarketError", "read_matrix_market", "write_matrix_market",
           "read_vector", "write_vector"]

_FIELDS = {"real", "complex", "integer", "pattern"}
_SYMMETRY = {"general", "symmetric"}


class MatrixMarketError(ValueError):
    pass


def _parse_header(line):
    parts = line.strip().split()
    if len(parts) != 5 or parts[0] != "%%MatrixMarket" or parts[1].lower() != "matrix":
        raise MatrixMarketError(f"malformed header: {line.strip()!r}")
    fmt, fld, sym = (p.lower() for p in parts[2:])
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unknown format {fmt!r}")
    if fld not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {fld!r}")
    if sym not in _SYMMETRY:
        raise MatrixMarketError(f"unsupported symmetry {sym!r}")
    if fmt == "array" and fld == "pattern":
        raise MatrixMarketError("array format cannot have pattern field")
    return fmt, fld, sym


def _data_lines(fh):
    for line in fh:
        s = line.strip()
        if s and not s.startswith("%"):
            yield s


def _read(path):
    with open(path) as fh:
        header = fh.readline()
        fmt, fld, sym = _parse_header(header)
        lines = _data_lines(fh)
        try:
            size = [int(t) for t in next(lines).split()]
        except StopIteration:
            raise MatrixMarketError("missing size line") from None
        body = list(lines)
    return fmt, fld, sym, size, body


def _parse_value(tokens, fld):
    if fld == "complex":
        return complex(float(tokens[0]), float(tokens[1]))
    if fld == "pattern":
        return 1.0
    return float(tokens[0])


def read_matrix_market(path):
    """Read a Matrix Market file into a :class:`CsrMatrix`.

    Symmetric files are expanded to full storage, 1-based indices are shifted
    to 0-based, duplicate coordinate entries are summed (with a warning) and
    explicit zeros are kept.
    """
    fmt, fld, sym, size, body = _read(path)
    dtype = np.complex128 if fld == "complex" else np.float64
    if fmt == "coordinate":
        if len(size) != 3:
            raise MatrixMarketError("coordinate size line needs 'rows cols nnz'")
        m, n, nnz = size
        if len(body) != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {len(body)}")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=dtype)
        for k, line in enumerate(body):
            tok = line.split()
            i, j = int(tok[0]) - 1, int(tok[1]) - 1
            if not (0 <= i < m and 0 <= j < n):
                raise MatrixMarketError(f"entry {k + 1}: index ({i + 1}, {j + 1}) out of range")
            rows[k], cols[k] = i, j
            vals[k] = _parse_value(tok[2:], fld)
    else:
        if len(size) != 2:
            raise MatrixMarketError("array size line needs 'rows cols'")
        m, n = size
        if sym == "symmetric":
            if m != n:
                raise MatrixMarketError("symmetric array must be square")
            # column-major traversal of the lower triangle
            cols, rows = np.triu_indices(n)
        else:
            cols, rows = np.divmod(np.arange(m * n), m)
        if len(body) != rows.size:
            raise MatrixMarketError(f"expected {rows.size} values, found {len(body)}")
        vals = np.array([_parse_value(line.split(), fld) for line in body], dtype=dtype)
    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    key = rows * n + cols
    n_dup = key.size - np.unique(key).size
    if n_dup:
        warnings.warn(f"{path}: {n_dup} duplicate entries summed", stacklevel=2)
    return CsrMatrix.from_coo(m, n, rows, cols, vals)


def _fmt(v, is_complex):
    if is_complex:
        return f"{float(v.real)!r} {float(v.imag)!r}"
    return repr(float(v))


def write_matrix_market(M, path, symmetric=False, comment=None):
    """Write ``M`` in coordinate format.

    With ``symmetric=True`` only the lower triangle is stored; ``M`` must then
    be exactly symmetric.
    """
    cplx = M.is_complex
    fld = "complex" if cplx else "real"
    rows = np.repeat(np.arange(M.nrows), np.diff(M.row_ptr))
    cols, vals = M.col_idx, M.values
    if symmetric:
        if not M.is_symmetric():
            raise ValueError("matrix is not symmetric")
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {fld} "
                 f"{'symmetric' if symmetric else 'general'}\n")
        if comment:
            for c in comment.splitlines():
                fh.write(f"% {c}\n")
        fh.write(f"{M.nrows} {M.ncols} {rows.size}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {_fmt(v, cplx)}\n")


def write_vector(x, path):
    """Write a vector or an ``n x k`` block as a general array file."""
    x = np.asarray(x)
    block = x.reshape(x.shape[0], -1)
    cplx = np.iscomplexobj(block)
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix array {'complex' if cplx else 'real'} general\n")
        fh.write(f"{block.shape[0]} {block.shape[1]}\n")
        for v in block.ravel(order="F"):
            fh.write(_fmt(v, cplx) + "\n")


def read_vector(path):
    fmt, fld, sym, size, body = _read(path)
    if fmt != "array" or sym != "general":
        raise MatrixMarketError("vectors must be stored as general array files")
    m, n = size
    dtype = np.complex128 if fld == "complex" else np.float64
    vals = np.array([_parse_value(line.split(), fld) for line in body], dtype=dtype)
    if vals.size != m * n:
        raise MatrixMarketError(f"expected {m * n} values, found {vals.size}")
    out = vals.reshape((m, n), order="F")
    return out[:, 0] if n == 1 else out

"""Deterministic test pencils with analytic (or dense-oracle) spectra."""

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .sparse import CsrMatrix, MatrixPencil

__all__ = [
    "ProblemSpec",
    "gen_fem1d",
    "gen_fem2d_grid",
    "gen_singular_mass",
    "gen_diag",
    "fem1d_eigenvalues",
    "fem2d_eigenvalues",
    "make_problem",
    "reference_eigenvalues",
]

FAMILIES = ("fem1d", "fem2d_grid", "diag", "singular_mass", "from_files")


@dataclass(frozen=True)
class ProblemSpec:
    family: str
    n: Optional[int] = None
    nx: Optional[int] = None
    ny: Optional[int] = None
    seed: int = 0
    zero_fraction: float = 0.0
    eigs: Optional[Sequence[float]] = None
    a_path: Optional[str] = None
    b_path: Optional[str] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown problem family {self.family!r}")
        if not 0 <= self.zero_fraction < 1:
            raise ValueError("zero_fraction must lie in [0, 1)")

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if v is not None}
        if "eigs" in d:
            d["eigs"] = [float(e) for e in d["eigs"]]
        return d


def _tridiag(n, lo, mid, hi):
    i = np.arange(n)
    rows = np.concatenate([i[1:], i, i[:-1]])
    cols = np.concatenate([i[:-1], i, i[1:]])
    vals = np.concatenate([np.full(n - 1, lo), np.full(n, mid), np.full(n - 1, hi)])
    return CsrMatrix.from_coo(n, n, rows, cols, vals)


def _fem1d_factors(n):
    h = 1.0 / (n + 1)
    K = _tridiag(n, -1.0 / h, 2.0 / h, -1.0 / h)
    M = _tridiag(n, h / 6.0, 4.0 * h / 6.0, h / 6.0)
    return K, M


def gen_fem1d(n):
    """Linear finite elements for ``-u'' = lam u`` on (0, 1), Dirichlet ends.

    ``A = (1/h) tridiag(-1, 2, -1)``, ``B = (h/6) tridiag(1, 4, 1)`` with
    ``h = 1/(n+1)``; the spectrum is :func:`fem1d_eigenvalues`.
    """
    if n < 1:
        raise ValueError("n must be positive")
    K, M = _fem1d_factors(n)
    return MatrixPencil(K, M, True)


def fem1d_eigenvalues(n):
    """``lam_k = (6/h^2) (1 - cos(k pi h)) / (2 + cos(k pi h))``, ascending."""
    h = 1.0 / (n + 1)
    c = np.cos(np.arange(1, n + 1) * np.pi * h)
    return np.sort(6.0 / h**2 * (1.0 - c) / (2.0 + c))


def gen_fem2d_grid(nx, ny):
    """Bilinear tensor-product elements on the unit square, ``nx * ny`` interior nodes.

    ``A = Kx (x) My + Mx (x) Ky`` and ``B = Mx (x) My``; every eigenvalue is a
    sum of one eigenvalue of each 1D factor pencil.
    """
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be positive")
    Kx, Mx = (m.to_scipy() for m in _fem1d_factors(nx))
    Ky, My = (m.to_scipy() for m in _fem1d_factors(ny))
    import scipy.sparse as sp

    A = sp.kron(Kx, My) + sp.kron(Mx, Ky)
    B = sp.kron(Mx, My)
    return MatrixPencil(CsrMatrix.from_scipy(A), CsrMatrix.from_scipy(B), True)


def fem2d_eigenvalues(nx, ny):
    lx, ly = fem1d_eigenvalues(nx), fem1d_eigenvalues(ny)
    return np.sort((lx[:, None] + ly[None, :]).ravel())


def gen_singular_mass(n, zero_fraction, seed=0, stiffness_scale=1.0):
    """1D stiffness against a lumped diagonal mass with zeroed entries.

    ``floor(zero_fraction * n)`` diagonal entries of ``B = h I``, picked by a
    seeded generator, are set exactly to zero.
    """
    if not 0 <= zero_fraction < 1:
        raise ValueError("zero_fraction must lie in [0, 1)")
    K, _ = _fem1d_factors(n)
    h = 1.0 / (n + 1)
    d = np.full(n, h)
    nzero = int(math.floor(zero_fraction * n))
    rng = np.random.default_rng(seed)
    d[rng.choice(n, size=nzero, replace=False)] = 0.0
    A = CsrMatrix(n, n, K.row_ptr, K.col_idx, stiffness_scale * K.values)
    return MatrixPencil(A, CsrMatrix.diag(d), nzero == 0)


def gen_diag(eigs):
    eigs = np.asarray(eigs, dtype=float)
    if np.any(eigs <= 0):
        raise ValueError("eigenvalues must be positive")
    return MatrixPencil(CsrMatrix.diag(eigs), CsrMatrix.identity(eigs.size), True)


def make_problem(spec):
    """Instantiate a :class:`ProblemSpec` (or an equivalent dict)."""
    if isinstance(spec, dict):
        spec = ProblemSpec(**spec)
    f = spec.family
    if f == "fem1d":
        return gen_fem1d(spec.n)
    if f == "fem2d_grid":
        return gen_fem2d_grid(spec.nx, spec.ny)
    if f == "diag":
        return gen_diag(spec.eigs)
    if f == "singular_mass":
        return gen_singular_mass(spec.n, spec.zero_fraction, spec.seed)
    from .mmio import read_matrix_market

    A = read_matrix_market(spec.a_path)
    B = read_matrix_market(spec.b_path)
    return MatrixPencil(A, B, True)


def reference_eigenvalues(spec):
    """Closed-form spectrum when the family has one, else ``None``."""
    if isinstance(spec, dict):
        spec = ProblemSpec(**spec)
    if spec.family == "fem1d":
        return fem1d_eigenvalues(spec.n)
    if spec.family == "fem2d_grid":
        return fem2d_eigenvalues(spec.nx, spec.ny)
    if spec.family == "diag":
        return np.sort(np.asarray(spec.eigs, dtype=float))
    return None

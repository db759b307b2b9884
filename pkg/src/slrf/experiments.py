"""Desk-scale experiment harness: alpha sweeps, conditioning checks, filter economics."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .eigensolver import EigConfig, solve_eigs
from .filters import design_filter
from .krylov import KrylovConfig, ShiftedSolver

__all__ = [
    "SweepRow",
    "alpha_sweep",
    "write_sweep_csv",
    "kappa_c_closed_form",
    "kappa_c_numeric",
    "kappa_s_numeric",
    "CondCheckResult",
    "check_props",
    "filter_economics",
    "harness_threads",
]

SWEEP_COLUMNS = ["Solver", "mu", "alpha", "Iteration", "Residual norm", "Termination"]


def harness_threads():
    """Worker count from ``SLRF_THREADS``; 0 or unset means serial."""
    raw = os.environ.get("SLRF_THREADS", "").strip()
    if not raw:
        return 0
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"SLRF_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("SLRF_THREADS must be >= 0")
    return n


def _map(fn, items, threads=None):
    threads = harness_threads() if threads is None else threads
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        # map preserves input order, so assembly does not depend on scheduling
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class SweepRow:
    solver: str
    mu: float
    alpha: float
    half_iterations: float
    relres: float
    termination: str

    @property
    def converged(self):
        return self.termination == "converged"

    def as_csv(self):
        return [self.solver, repr(self.mu), repr(self.alpha), f"{self.half_iterations:g}",
                f"{self.relres:.6e}", self.termination]


def _solver_label(droptol):
    return "none" if droptol is None else f"ILUT({droptol:g})"


def alpha_sweep(pencil, mu, alphas, droptols=(1e-4,), cfg=None, rhs_seed=0,
                threads=None):
    """Solve ``(A - mu(1 + alpha i) B) x = f`` once per ``(droptol, alpha)``.

    ``droptol=None`` means no preconditioner. The right-hand side is a seeded
    random real vector shared by every row. Failed solves are returned as rows.
    """
    cfg = cfg or KrylovConfig(rel_tol=1e-10, max_iter=1000)
    f = np.random.default_rng(rhs_seed).standard_normal(pencil.n)
    cells = [(d, float(a)) for d in droptols for a in alphas]

    def run(cell):
        d, a = cell
        sigma = mu * (1.0 + 1j * a)
        S = ShiftedSolver(pencil, sigma, droptol=0.0 if d is None else d, cfg=cfg,
                          precondition=d is not None)
        _, st = S.solve(f)
        return SweepRow(_solver_label(d), float(mu), a, st.half_iterations,
                        st.final_relres, st.termination.value)

    return _map(run, cells, threads)


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(SWEEP_COLUMNS)
        for r in rows:
            wr.writerow(r.as_csv())


# -- conditioning -----------------------------------------------------------

def kappa_c_closed_form(eigs, mu, alpha):
    """Condition number of ``B^{-1}(A - sigma B)`` from the pencil spectrum.

    The ratio of the farthest to the nearest ``|lam - sigma|`` with
    ``sigma = mu (1 + alpha i)``. For ``mu <= lam_1`` this is
    ``sqrt((lam_n - mu)^2 + (alpha mu)^2) / sqrt((lam_1 - mu)^2 + (alpha mu)^2)``.
    """
    eigs = np.asarray(eigs, dtype=float)
    d = eigs - mu
    am2 = (alpha * mu) ** 2
    return float(np.sqrt(np.max(d * d) + am2) / np.sqrt(np.min(d * d) + am2))


def _dense(M):
    return M.to_dense() if hasattr(M, "to_dense") else np.asarray(M)


def kappa_c_numeric(pencil, mu, alpha):
    """2-norm condition number of ``C = B^{-1}(A - sigma B)`` in the B inner product.

    Computed from the singular values of ``B^{1/2} C B^{-1/2}``; for ``B = I``
    this is the plain Euclidean condition number.
    """
    A, B = _dense(pencil.A), _dense(pencil.B)
    sigma = mu * (1.0 + 1j * alpha)
    R = scipy.linalg.sqrtm(B).real
    Rinv = np.linalg.inv(R)
    C = Rinv @ A @ Rinv - sigma * np.eye(A.shape[0])
    s = np.linalg.svd(C, compute_uv=False)
    return float(s[0] / s[-1])


def kappa_s_numeric(pencil, mu, alpha):
    """2-norm condition number of ``A - mu(1 + alpha i) B``."""
    A, B = _dense(pencil.A), _dense(pencil.B)
    s = np.linalg.svd(A - mu * (1.0 + 1j * alpha) * B, compute_uv=False)
    return float(s[0] / s[-1])


def _non_increasing(v):
    return bool(np.all(np.diff(v) <= 1e-12 * np.abs(v[:-1])))


def _strictly_decreasing(v):
    return bool(np.all(np.diff(v) < 0))


@dataclass
class CondCheckResult:
    alphas: list
    mu: float
    kappa_c_closed: list
    kappa_c_numeric: list
    kappa_s_numeric: list
    rtol: float
    max_rel_err: float = field(init=False)
    agree: bool = field(init=False)
    c_monotone: bool = field(init=False)
    s_decreasing: bool = field(init=False)

    def __post_init__(self):
        cf = np.asarray(self.kappa_c_closed)
        nu = np.asarray(self.kappa_c_numeric)
        self.max_rel_err = float(np.max(np.abs(cf - nu) / np.abs(cf)))
        self.agree = self.max_rel_err <= self.rtol
        self.c_monotone = _non_increasing(nu)
        self.s_decreasing = _strictly_decreasing(np.asarray(self.kappa_s_numeric))

    @property
    def ok(self):
        return self.agree and self.c_monotone and self.s_decreasing

    def to_dict(self):
        return {
            "alphas": list(map(float, self.alphas)), "mu": float(self.mu),
            "kappa_c_closed": self.kappa_c_closed, "kappa_c_numeric": self.kappa_c_numeric,
            "kappa_s_numeric": self.kappa_s_numeric, "rtol": self.rtol,
            "max_rel_err": self.max_rel_err, "agree": self.agree,
            "kappa_c_monotone": self.c_monotone, "kappa_s_decreasing": self.s_decreasing,
            "ok": self.ok,
        }


def check_props(pencil, mu, alphas, eigs=None, rtol=1e-8):
    """Closed-form vs numeric conditioning over an alpha grid.

    ``eigs`` defaults to a dense symmetric-definite eigensolve of the pencil,
    so keep ``n`` small (a few hundred).
    """
    if pencil.n > 2000:
        raise ValueError("check_props is dense; use n <= 2000")
    if eigs is None:
        eigs = scipy.linalg.eigh(_dense(pencil.A), _dense(pencil.B), eigvals_only=True)
    alphas = [float(a) for a in alphas]
    return CondCheckResult(
        alphas=alphas, mu=float(mu),
        kappa_c_closed=[kappa_c_closed_form(eigs, mu, a) for a in alphas],
        kappa_c_numeric=[kappa_c_numeric(pencil, mu, a) for a in alphas],
        kappa_s_numeric=[kappa_s_numeric(pencil, mu, a) for a in alphas],
        rtol=rtol,
    )


# -- filter economics ---------------------------------------------------------

def filter_economics(pencil, gamma, nev, kinds=("midpoint", "gauss_legendre",
                     "gauss_chebyshev", "slrf"), n_poles=4, alpha=1.0, beta=0.01,
                     eig_kw=None, threads=None):
    """Run the eigensolver once per filter kind; returns ``{kind: EigReport}``."""
    eig_kw = dict(eig_kw or {})

    def run(kind):
        F = design_filter(kind, gamma, n_poles, alpha=alpha, beta=beta)
        return kind, solve_eigs(pencil, F, EigConfig(gamma, nev, **eig_kw))

    return dict(_map(run, kinds, threads))

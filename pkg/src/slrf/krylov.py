"""Right-preconditioned BiCGStab with half-step convergence checks.

Convergence is tested twice per iteration (after the ``s`` update and after
the full update), so iteration counts are reported in units of one half.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ilut import IlutFactors, ilut_apply, ilut_factorize
from .sparse import CsrMatrix, ShiftedPattern, SpmvCounter, rcm_order, spmv

__all__ = ["KrylovConfig", "SolveStats", "Termination", "bicgstab",
           "ShiftedSolver", "write_trace_csv"]

_EPS = np.finfo(float).eps
_BREAKDOWN = 1e-300


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    STAGNATION = "stagnation"
    BREAKDOWN = "breakdown"


@dataclass(frozen=True)
class KrylovConfig:
    """Stopping rules for :func:`bicgstab`.

    ``seed=None`` uses the initial residual as shadow vector; an integer
    draws a seeded random real shadow vector instead.
    """

    rel_tol: float = 1e-13
    max_iter: int = 1000
    stagnation_window: int = 20
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.stagnation_window < 1:
            raise ValueError("stagnation_window must be >= 1")


@dataclass
class SolveStats:
    half_iterations: float
    final_relres: float
    termination: Termination
    spmv_count: int
    precond_apply_count: int
    trace: list = field(default_factory=list, repr=False)

    @property
    def converged(self):
        return self.termination is Termination.CONVERGED


def write_trace_csv(stats, path):
    """Dump ``(half_iteration, relres)`` rows of a solve trace."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["half_iteration", "relres"])
        for h, r in stats.trace:
            wr.writerow([h, repr(float(r))])


def bicgstab(M, f, precond=None, cfg=None, x0=None, counter=None):
    """Solve ``M x = f`` with (right-preconditioned) BiCGStab.

    Parameters
    ----------
    M : CsrMatrix
    f : ndarray
    precond : IlutFactors, optional
    cfg : KrylovConfig, optional
    x0 : ndarray, optional
        Initial guess (zero by default; a nonzero guess costs one extra spMV).
    counter : SpmvCounter, optional
        Shared tally that also receives this solve's products.

    Returns
    -------
    x : ndarray
        The converged iterate, or the iterate with the smallest residual.
    stats : SolveStats
    """
    cfg = cfg or KrylovConfig()
    f = np.asarray(f, dtype=np.complex128)
    n = f.size
    if M.nrows != M.ncols or M.nrows != n:
        raise ValueError("dimension mismatch in bicgstab")
    local = SpmvCounter()
    n_prec = 0

    def matvec(v):
        local.add()
        return spmv(M, v)

    def prec(v):
        nonlocal n_prec
        if precond is None:
            return v
        n_prec += 1
        return ilut_apply(precond, v)

    def true_relres(x):
        return float(np.linalg.norm(f - matvec(x)) / nf)

    def done(x, half, term, relres):
        if counter is not None:
            counter.add(local.count)
        return x, SolveStats(half, relres, term, local.count, n_prec, trace)

    def finish(x, half, term):
        relres = true_relres(x)
        if relres <= cfg.rel_tol:
            term = Termination.CONVERGED
        return done(x, half, term, relres)

    nf = float(np.linalg.norm(f))
    if nf == 0:
        raise ValueError("right-hand side must be nonzero")
    if x0 is None:
        x = np.zeros(n, dtype=np.complex128)
        r = f.copy()
    else:
        x = np.asarray(x0, dtype=np.complex128).copy()
        r = f - matvec(x)
    relres = float(np.linalg.norm(r) / nf)
    trace = [(0.0, relres)]
    best_x, best_res = x.copy(), relres
    if relres <= cfg.rel_tol:
        return done(x, 0.0, Termination.CONVERGED, relres)

    if cfg.seed is None:
        rhat = r.copy()
    else:
        rhat = np.random.default_rng(cfg.seed).standard_normal(n).astype(np.complex128)
    rho_old = alpha = omega = 1.0 + 0j
    v = np.zeros(n, dtype=np.complex128)
    p = np.zeros(n, dtype=np.complex128)
    stall = 0
    half = 0.0

    def progress(res):
        # stagnation: best residual not improved by a relative 10*eps
        nonlocal best_res, stall
        if res < best_res * (1.0 - 10 * _EPS):
            best_res = res
            stall = 0
            return True
        stall += 1
        return False

    for it in range(1, cfg.max_iter + 1):
        rho = np.vdot(rhat, r)
        if abs(rho) < _BREAKDOWN or abs(omega) < _BREAKDOWN:
            return finish(best_x, half, Termination.BREAKDOWN)
        if it == 1:
            p = r.copy()
        else:
            beta = (rho / rho_old) * (alpha / omega)
            p = r + beta * (p - omega * v)
        ph = prec(p)
        v = matvec(ph)
        denom = np.vdot(rhat, v)
        if abs(denom) < _BREAKDOWN:
            return finish(best_x, half, Termination.BREAKDOWN)
        alpha = rho / denom
        s = r - alpha * v
        x_half = x + alpha * ph

        half = it - 0.5
        res = float(np.linalg.norm(s) / nf)
        trace.append((half, res))
        if progress(res):
            best_x = x_half.copy()
        if res <= cfg.rel_tol:
            tr = true_relres(x_half)
            if tr <= cfg.rel_tol:
                return done(x_half, half, Termination.CONVERGED, tr)
        if stall >= cfg.stagnation_window:
            return finish(best_x, half, Termination.STAGNATION)

        sh = prec(s)
        t = matvec(sh)
        tt = np.vdot(t, t).real
        if tt < _BREAKDOWN:
            return finish(x_half if res <= best_res else best_x, half,
                          Termination.BREAKDOWN)
        omega = np.vdot(t, s) / tt
        x = x_half + omega * sh
        r = s - omega * t
        rho_old = rho

        half = float(it)
        res = float(np.linalg.norm(r) / nf)
        trace.append((half, res))
        if progress(res):
            best_x = x.copy()
        if res <= cfg.rel_tol:
            tr = true_relres(x)
            if tr <= cfg.rel_tol:
                return done(x, half, Termination.CONVERGED, tr)
        if stall >= cfg.stagnation_window:
            return finish(best_x, half, Termination.STAGNATION)

    return finish(best_x, half, Termination.MAX_ITER)


class ShiftedSolver:
    """Preconditioned solver for ``(A - sigma B) x = f`` at one fixed shift.

    The matrix is RCM-reordered (ordering of ``pattern(A) + pattern(B)``) and
    factorized once; :meth:`solve` works in permuted coordinates and returns
    the solution in the original ordering.
    """

    def __init__(self, pencil, sigma, droptol=1e-4, cfg=None, perm=None,
                 pattern=None, precondition=True, fill_cap=None):
        self.sigma = complex(sigma)
        self.cfg = cfg or KrylovConfig()
        pattern = pattern or ShiftedPattern(pencil)
        M = pattern.matrix(self.sigma)
        if perm is None:
            perm = rcm_order(M)
        self.perm = perm
        self.M = M.permute(perm)
        self.factors = ilut_factorize(self.M, droptol, fill_cap) if precondition else None

    def solve(self, f, counter=None):
        x, stats = bicgstab(self.M, self.perm.apply(f), self.factors, self.cfg,
                            counter=counter)
        return self.perm.unapply(x), stats

"""Rational-filter subspace iteration with Rayleigh-Ritz extraction.

Each outer step filters the current block through every pole pair,
B-orthonormalizes the result, solves the projected pencil, and restarts from
the Ritz vectors. The wanted eigenpairs are the Ritz pairs with values in
(0, gamma]; the iteration stops once all of them meet the residual tolerance.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dense import dense_sym_gep
from .krylov import KrylovConfig, ShiftedSolver, Termination
from .sparse import ShiftedPattern, SpmvCounter, rcm_order, spmv

__all__ = [
    "EigConfig",
    "EigReport",
    "PoleStats",
    "SubspaceCollapse",
    "FilterApplicator",
    "apply_filter_block",
    "b_orthonormalize",
    "rayleigh_ritz",
    "solve_eigs",
    "DEVIATIONS",
]

DEVIATIONS = [
    "filtered block is B-orthonormalized (two-pass Gram-Schmidt) before Rayleigh-Ritz",
    "convergence is required only for Ritz values inside (0, gamma]",
    "BiCGStab stagnation: best relative residual not improved by 10*eps "
    "over `stagnation_window` consecutive half steps",
]


class SubspaceCollapse(RuntimeError):
    """Filtered block lost rank below the number of wanted eigenpairs."""


@dataclass(frozen=True)
class EigConfig:
    gamma: float
    nev: int
    subspace_factor: float = 1.2
    tol: float = 1e-8
    max_outer: int = 50
    seed: int = 0
    inner: KrylovConfig = field(default_factory=KrylovConfig)
    droptol: float = 1e-4
    precondition: bool = True

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.nev < 1:
            raise ValueError("nev must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.subspace_size < self.nev:
            raise ValueError("subspace_factor must give L >= nev")

    @property
    def subspace_size(self):
        # guard against 1.2 * 10 = 12.000000000000002
        return int(math.ceil(round(self.subspace_factor * self.nev, 9)))

    def to_dict(self):
        return {
            "gamma": self.gamma, "nev": self.nev, "subspace_factor": self.subspace_factor,
            "subspace_size": self.subspace_size, "tol": self.tol,
            "max_outer": self.max_outer, "seed": self.seed, "droptol": self.droptol,
            "precondition": self.precondition,
            "inner": {"rel_tol": self.inner.rel_tol, "max_iter": self.inner.max_iter,
                      "stagnation_window": self.inner.stagnation_window,
                      "seed": self.inner.seed},
        }


@dataclass
class PoleStats:
    """Inner-solve aggregate for one pole."""

    pole: complex
    solves: int = 0
    half_iterations: float = 0.0
    spmv: int = 0
    precond_applies: int = 0
    failures: int = 0
    terminations: dict = field(default_factory=dict)

    @property
    def avg_half_iters(self):
        return self.half_iterations / self.solves if self.solves else 0.0

    def add(self, st):
        self.solves += 1
        self.half_iterations += st.half_iterations
        self.spmv += st.spmv_count
        self.precond_applies += st.precond_apply_count
        if not st.converged:
            self.failures += 1
        key = st.termination.value
        self.terminations[key] = self.terminations.get(key, 0) + 1

    def to_dict(self):
        return {
            "pole": {"re": self.pole.real, "im": self.pole.imag},
            "avg_half_iters": self.avg_half_iters,
            "solves": self.solves,
            "spmv": self.spmv,
            "failures": self.failures,
            "terminations": dict(sorted(self.terminations.items())),
        }


@dataclass
class EigReport:
    theta: np.ndarray
    X: np.ndarray
    rho: np.ndarray
    inside_count: int
    outer_iters: int
    spmv_total: int
    spmv_solver: int
    per_pole_stats: list
    converged: bool
    history: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    config: Optional[EigConfig] = None
    filter: Optional[object] = None

    @property
    def inside(self):
        return (self.theta > 0) & (self.theta <= self.config.gamma)

    @property
    def spmv_avg(self):
        """Inner-solver products per outer iteration."""
        return self.spmv_solver / self.outer_iters if self.outer_iters else 0.0

    def to_dict(self):
        return {
            "config": None if self.config is None else self.config.to_dict(),
            "filter": None if self.filter is None else self.filter.to_dict(),
            "theta": [float(t) for t in self.theta],
            "rho": [float(r) for r in self.rho],
            "inside_count": int(self.inside_count),
            "outer_iters": int(self.outer_iters),
            "spmv": int(self.spmv_solver),
            "spmv_total": int(self.spmv_total),
            "spmv_avg": float(self.spmv_avg),
            "per_pole": [p.to_dict() for p in self.per_pole_stats],
            "history": self.history,
            "converged": bool(self.converged),
            "notes": list(self.notes),
            "deviations": list(DEVIATIONS),
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


class FilterApplicator:
    """Holds one factorized shifted solver per pole, built on first use."""

    def __init__(self, pencil, filt, inner=None, droptol=1e-4, precondition=True):
        self.pencil = pencil
        self.filter = filt
        self.inner = inner or KrylovConfig()
        self.droptol = droptol
        self.precondition = precondition
        self._pattern = ShiftedPattern(pencil)
        self._perm = None
        self._solvers = {}
        self.stats = [PoleStats(complex(p)) for p in filt.poles]

    def solver(self, j):
        if j not in self._solvers:
            if self._perm is None:
                self._perm = rcm_order(self._pattern.matrix(0.0))
            self._solvers[j] = ShiftedSolver(
                self.pencil, self.filter.poles[j], self.droptol, self.inner,
                perm=self._perm, pattern=self._pattern, precondition=self.precondition)
        return self._solvers[j]

    def apply(self, V, counter=None, aux_counter=None):
        """``U = sum_j 2 Re(w_j (A - sigma_j B)^{-1} B V)``."""
        V = np.asarray(V, dtype=float)
        squeeze = V.ndim == 1
        V = V.reshape(V.shape[0], -1)
        BV = spmv(self.pencil.B, V, aux_counter)
        U = np.zeros(V.shape)
        failures = 0
        for j, w in enumerate(self.filter.weights):
            S = self.solver(j)
            Y = np.empty(V.shape, dtype=np.complex128)
            for i in range(V.shape[1]):
                if not np.any(BV[:, i]):
                    Y[:, i] = 0.0
                    continue
                Y[:, i], st = S.solve(BV[:, i], counter)
                self.stats[j].add(st)
                failures += not st.converged
            U += 2.0 * (w * Y).real
        return (U[:, 0] if squeeze else U), failures


def apply_filter_block(pencil, filt, V, inner=None, droptol=1e-4, counter=None,
                       precondition=True):
    """One-shot filter application; returns ``(U, per-pole stats)``."""
    app = FilterApplicator(pencil, filt, inner, droptol, precondition)
    U, failures = app.apply(V, counter)
    if failures:
        warnings.warn(f"{failures} inner solves did not converge", stacklevel=2)
    return U, app.stats


def b_orthonormalize(U, B, counter=None, drop_tol=1e-12):
    """Two-pass modified Gram-Schmidt in the B inner product.

    Columns whose B-norm after projection is below ``drop_tol`` times their
    B-norm before projection are dropped. Returns ``(Q, kept_columns)``.
    """
    U = np.array(U, dtype=float)
    n, m = U.shape
    Q = np.zeros((n, m))
    BQ = np.zeros((n, m))
    kept = []
    k = 0
    for i in range(m):
        u = U[:, i]
        Bu = spmv(B, u, counter)
        before = math.sqrt(max(u @ Bu, 0.0))
        if before == 0.0:
            continue
        for _ in range(2):
            if k:
                c = BQ[:, :k].T @ u
                u = u - Q[:, :k] @ c
        Bu = spmv(B, u, counter)
        after = math.sqrt(max(u @ Bu, 0.0))
        if after < drop_tol * before:
            continue
        Q[:, k] = u / after
        BQ[:, k] = Bu / after
        kept.append(i)
        k += 1
    return Q[:, :k], kept


def rayleigh_ritz(pencil, U, counter=None):
    """Ritz values (ascending), coefficient vectors and B-normalised Ritz vectors."""
    AU = spmv(pencil.A, U, counter)
    BU = spmv(pencil.B, U, counter)
    Ahat = U.T @ AU
    Bhat = U.T @ BU
    theta, S, kept = dense_sym_gep(Ahat, Bhat)
    X = U @ S
    return theta, S, X, kept.size


def _residuals(pencil, theta, X, counter=None):
    AX = spmv(pencil.A, X, counter)
    BX = spmv(pencil.B, X, counter)
    R = AX - BX * theta
    num = np.linalg.norm(R, axis=0)
    den = np.abs(theta) * np.linalg.norm(BX, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / den, np.inf)


def solve_eigs(pencil, filt, cfg, callback=None):
    """Compute the eigenpairs of ``(A, B)`` in (0, gamma] by filtered subspace iteration.

    Parameters
    ----------
    pencil : MatrixPencil
        Symmetric definite.
    filt : RationalFilter
    cfg : EigConfig
    callback : callable, optional
        ``callback(k, theta, rho)`` after every outer iteration.

    Returns
    -------
    EigReport
    """
    if not pencil.b_definite:
        raise ValueError("solve_eigs needs a definite pencil (B positive definite)")
    n = pencil.n
    L = min(cfg.subspace_size, n)
    gamma = cfg.gamma
    solver_ctr = SpmvCounter()
    aux_ctr = SpmvCounter()
    app = FilterApplicator(pencil, filt, cfg.inner, cfg.droptol, cfg.precondition)

    rng = np.random.default_rng(cfg.seed)
    V, _ = b_orthonormalize(rng.standard_normal((n, L)), pencil.B, aux_ctr)
    history, notes = [], []
    theta = np.empty(0)
    X = np.empty((n, 0))
    rho = np.empty(0)
    converged = False
    k = 0
    for k in range(1, cfg.max_outer + 1):
        U, failures = app.apply(V, solver_ctr, aux_ctr)
        Q, kept = b_orthonormalize(U, pencil.B, aux_ctr)
        theta, _, X, rank = rayleigh_ritz(pencil, Q, aux_ctr)
        rho = _residuals(pencil, theta, X, aux_ctr)
        inside = (theta > 0) & (theta <= gamma)
        n_in = int(inside.sum())
        max_rho = float(rho[inside].max()) if n_in else 0.0
        history.append({"iter": k, "rank": int(rank), "inside": n_in,
                        "max_rho_inside": max_rho, "inner_failures": int(failures)})
        if callback is not None:
            callback(k, theta, rho)
        if rank < min(cfg.nev, L):
            raise SubspaceCollapse(
                f"filtered subspace rank {rank} at iteration {k} is below nev={cfg.nev}; "
                "increase nev/L or use a better filter")
        if rank < L:
            notes.append(f"iteration {k}: rank reduced to {rank} of {L}")
        if max_rho <= cfg.tol:
            converged = True
            break
        V = X
        if V.shape[1] < L:
            # top the block back up to L columns
            extra = rng.standard_normal((n, L - V.shape[1]))
            V, _ = b_orthonormalize(np.hstack([V, extra]), pencil.B, aux_ctr)

    inside = (theta > 0) & (theta <= gamma)
    if not converged and inside.sum() == theta.size == L:
        notes.append("all Ritz values inside (0, gamma] without convergence: "
                     "the interval likely holds more than L eigenvalues")
    for j, st in enumerate(app.stats):
        if st.failures:
            notes.append(f"pole {j}: {st.failures} of {st.solves} inner solves did not converge")
    return EigReport(
        theta=theta, X=X, rho=rho, inside_count=int(inside.sum()), outer_iters=k,
        spmv_total=solver_ctr.count + aux_ctr.count, spmv_solver=solver_ctr.count,
        per_pole_stats=app.stats, converged=converged, history=history, notes=notes,
        config=cfg, filter=filt)

"""Rational filters in conjugate-pair form.

A filter is stored as ``N`` poles in the upper half plane with complex
weights; the lower-half poles are the conjugates. All normalising constants
live in the weights, so that

    phi(x) = sum_j 2 Re( w_j / (x - sigma_j) )

and applying the filter to a real block is ``U = sum_j 2 Re(w_j Y_j)`` with
``Y_j = (A - sigma_j B)^{-1} B V``.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "RationalFilter",
    "DeltaWeight",
    "FilterDesignConfig",
    "eval_filter",
    "eval_filter_derivative",
    "separation_factor",
    "design_slrf",
    "design_quadrature_filter",
    "design_filter",
    "compare_filters",
    "fit_weights",
    "filter_objective",
    "write_filter_json",
    "read_filter_json",
    "write_filter_curve",
]

KINDS = ("slrf", "midpoint", "gauss_legendre", "gauss_chebyshev")
QUADRATURE_KINDS = KINDS[1:]


@dataclass(frozen=True)
class RationalFilter:
    poles: np.ndarray
    weights: np.ndarray
    gamma: float
    kind: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    kappa: Optional[float] = None
    objective: Optional[float] = None
    design_warning: Optional[str] = None

    def __post_init__(self):
        poles = np.atleast_1d(np.asarray(self.poles, dtype=np.complex128))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=np.complex128))
        if poles.shape != weights.shape:
            raise ValueError("poles and weights must have equal length")
        if np.any(poles.imag <= 0):
            raise ValueError("poles must lie strictly in the upper half plane")
        if self.kind not in KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "weights", weights)

    @property
    def n_poles(self):
        return self.poles.size

    def __call__(self, x):
        return eval_filter(self, x)

    def derivative(self, x):
        return eval_filter_derivative(self, x)

    @property
    def separation_factor(self):
        return separation_factor(self)

    def full_poles(self):
        """All ``2N`` poles and weights (upper half first)."""
        return (np.concatenate([self.poles, self.poles.conj()]),
                np.concatenate([self.weights, self.weights.conj()]))

    def to_dict(self):
        return {
            "kind": self.kind,
            "gamma": float(self.gamma),
            "alpha": None if self.alpha is None else float(self.alpha),
            "beta": None if self.beta is None else float(self.beta),
            "kappa": None if self.kappa is None else float(self.kappa),
            "poles": [{"re": float(z.real), "im": float(z.imag)} for z in self.poles],
            "weights": [{"re": float(z.real), "im": float(z.imag)} for z in self.weights],
            "separation_factor": float(self.separation_factor),
            "objective": None if self.objective is None else float(self.objective),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            poles=[complex(p["re"], p["im"]) for p in d["poles"]],
            weights=[complex(w["re"], w["im"]) for w in d["weights"]],
            gamma=d["gamma"], kind=d["kind"], alpha=d.get("alpha"),
            beta=d.get("beta"), kappa=d.get("kappa"), objective=d.get("objective"),
        )


def eval_filter(F, x):
    """``phi(x)`` for scalar or array ``x`` (real)."""
    x = np.asarray(x, dtype=float)
    g = F.weights / (x[..., None] - F.poles)
    return 2.0 * g.real.sum(axis=-1)


def eval_filter_derivative(F, x):
    x = np.asarray(x, dtype=float)
    g = -F.weights / (x[..., None] - F.poles) ** 2
    return 2.0 * g.real.sum(axis=-1)


def separation_factor(F):
    """``|phi'(gamma)|``."""
    return float(abs(eval_filter_derivative(F, F.gamma)))


# ---------------------------------------------------------------------------
# least-squares design on the alpha lines

@dataclass(frozen=True)
class DeltaWeight:
    """Piecewise-constant weight: ``beta`` on [0, gamma], 1 on (gamma, kappa]."""

    gamma: float
    beta: float
    kappa: Optional[float] = None

    def __post_init__(self):
        if self.kappa is None:
            object.__setattr__(self, "kappa", 10.0 * self.gamma)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t <= self.gamma, self.beta, 1.0)
        return np.where((t < 0) | (t > self.kappa), 0.0, out)


@dataclass(frozen=True)
class FilterDesignConfig:
    n_poles: int = 4
    alpha: float = 1.0
    beta: float = 0.01
    grid_points: int = 4001
    max_outer: int = 2000
    obj_tol: float = 1e-10
    min_gap: Optional[float] = None
    multistart: bool = True

    def __post_init__(self):
        if self.n_poles < 1:
            raise ValueError("n_poles must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.grid_points < 100:
            raise ValueError("grid_points must be >= 100")
        if not 0 <= self.gap * (self.n_poles - 1) < 1:
            raise ValueError("min_gap too large for n_poles")

    @property
    def gap(self):
        """Minimum abscissa spacing relative to gamma."""
        if self.min_gap is None:
            return min(0.1, 0.5 / self.n_poles)
        return self.min_gap


@dataclass
class _Grid:
    t: np.ndarray
    sqrt_w: np.ndarray   # sqrt(trapezoid weight * delta)
    target: np.ndarray   # step function h


def _design_grid(gamma, beta, grid_points, kappa=None):
    delta = DeltaWeight(gamma, beta, kappa)
    m = grid_points
    # uniform grid on [0, kappa]; gamma is placed exactly on a node
    t = np.linspace(0.0, delta.kappa, m)
    k = int(round(gamma / delta.kappa * (m - 1)))
    t[k] = gamma
    tw = np.empty(m)
    dt = np.diff(t)
    tw[0], tw[-1] = dt[0] / 2, dt[-1] / 2
    tw[1:-1] = (dt[:-1] + dt[1:]) / 2
    h = (t <= gamma).astype(float)
    return _Grid(t, np.sqrt(tw * delta(t)), h)


def _basis(t, poles):
    # phi(t) = sum_j 2 Re(w_j g_j) = sum_j 2 Re(g_j) a_j - 2 Im(g_j) b_j
    g = 1.0 / (t[:, None] - poles[None, :])
    return np.hstack([2.0 * g.real, -2.0 * g.imag])


def fit_weights(poles, grid):
    """Weighted least-squares weights for fixed poles; returns (weights, objective)."""
    G = _basis(grid.t, poles) * grid.sqrt_w[:, None]
    rhs = grid.target * grid.sqrt_w
    coef, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    n = poles.size
    w = coef[:n] + 1j * coef[n:]
    res = G @ coef - rhs
    return w, float(res @ res)


def filter_objective(F, grid_points=4001, beta=None):
    """Discrete ``||phi - h||_delta^2`` of a filter (trapezoid rule on [0, kappa])."""
    beta = F.beta if beta is None else beta
    grid = _design_grid(F.gamma, beta, grid_points, F.kappa)
    r = (eval_filter(F, grid.t) - grid.target) * grid.sqrt_w
    return float(r @ r)


def _slrf_poles(x, alpha):
    return x * (1.0 + 1j * alpha)


def _project_abscissae(x, gamma, gap):
    """Sort, enforce ``x_{j+1} - x_j >= gap`` and ``x_j <= gamma``."""
    x = np.sort(x)
    for j in range(1, x.size):
        x[j] = max(x[j], x[j - 1] + gap)
    x[-1] = min(x[-1], gamma)
    for j in range(x.size - 2, -1, -1):
        x[j] = min(x[j], x[j + 1] - gap)
    return x


def _cluster_starts(N, gamma, gap, n_offsets=20):
    """Evenly spaced abscissa clusters slid across (0, gamma]."""
    out = []
    for spacing in (gap, 1.5 * gap, 2.0 * gap):
        width = (N - 1) * spacing
        if width >= gamma:
            continue
        for lo in np.linspace(0.0, gamma - width, n_offsets + 1)[1:]:
            out.append(lo + spacing * np.arange(N))
    return out


def design_slrf(cfg, gamma):
    """Optimise pole abscissae ``x_j`` in (0, gamma] and weights ``w_j``.

    Variable projection: for fixed ``x_j`` the weights come from a linear
    least-squares solve, and the outer search over ``log x_j`` is Nelder-Mead
    restarted once from its best point. Two outer searches are run, one from
    the uniform midpoints and one from the best of a deterministic scan of
    evenly spaced clusters. Candidate abscissae are projected onto
    ``x_j <= gamma`` with neighbours at least ``gap`` apart (coalescing poles
    drive the weights to infinity).
    """
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    grid = _design_grid(gamma, cfg.beta, cfg.grid_points)
    N = cfg.n_poles
    gap = cfg.gap * gamma

    def abscissae(z):
        return _project_abscissae(np.exp(z), gamma, gap)

    def obj(z):
        return fit_weights(_slrf_poles(abscissae(z), cfg.alpha), grid)[1]

    x_init = gamma * (2.0 * np.arange(1, N + 1) - 1.0) / (2.0 * N)
    z0 = np.log(_project_abscissae(x_init, gamma, gap))
    f0 = obj(z0)
    starts = [z0]
    if cfg.multistart and N > 1:
        scan = [np.log(x) for x in _cluster_starts(N, gamma, gap)]
        starts.append(min(scan, key=obj))

    best_z, best_f = z0, f0
    for z in starts:
        fz = obj(z)
        budget = cfg.max_outer
        for _ in range(2):
            if budget <= 0:
                break
            res = minimize(obj, z, method="Nelder-Mead",
                           options={"maxfev": budget, "xatol": 1e-8,
                                    "fatol": cfg.obj_tol * max(fz, 1e-300),
                                    "adaptive": N > 2})
            budget -= res.nfev
            if res.fun < fz:
                z, fz = res.x, float(res.fun)
        if fz < best_f:
            best_z, best_f = z, fz

    warning = None
    if not best_f < f0:
        warning = "optimizer did not reduce the objective; initial abscissae kept"
        warnings.warn(warning, stacklevel=2)
        best_z = z0
    x = abscissae(best_z)
    poles = _slrf_poles(x, cfg.alpha)
    w, fval = fit_weights(poles, grid)
    return RationalFilter(poles, w, gamma, "slrf", alpha=cfg.alpha, beta=cfg.beta,
                          kappa=10.0 * gamma, objective=fval, design_warning=warning)


# ---------------------------------------------------------------------------
# quadrature filters on the circle through 0 and gamma

def _quadrature_rule(kind, N):
    """Nodes ``theta_j`` in (0, pi) and weights ``q_j`` for ``int_0^pi d theta``."""
    if kind == "midpoint":
        theta = (np.arange(1, N + 1) - 0.5) * np.pi / N
        q = np.full(N, np.pi / N)
    elif kind == "gauss_legendre":
        t, wt = np.polynomial.legendre.leggauss(N)
        theta = np.pi * (1.0 - t) / 2.0
        q = np.pi / 2.0 * wt
    elif kind == "gauss_chebyshev":
        j = np.arange(1, N + 1)
        t = np.cos((2 * j - 1) * np.pi / (2 * N))
        # int_{-1}^{1} f dt ~ (pi/N) sum f(t_j) sqrt(1 - t_j^2)
        wt = np.pi / N * np.sqrt(1.0 - t**2)
        theta = np.pi * (1.0 - t) / 2.0
        q = np.pi / 2.0 * wt
    else:
        raise ValueError(f"unknown quadrature kind {kind!r}")
    order = np.argsort(theta)
    return theta[order], q[order]


def design_quadrature_filter(kind, N, gamma):
    """Filter from a quadrature rule on the circle ``|z - gamma/2| = gamma/2``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    gamma = float(gamma)
    c = r = gamma / 2.0
    theta, q = _quadrature_rule(kind, N)
    e = np.exp(1j * theta)
    poles = c + r * e
    weights = -q * r * e / (2.0 * np.pi)
    # order by increasing real part
    order = np.argsort(poles.real)
    return RationalFilter(poles[order], weights[order], gamma, kind)


def design_filter(kind, gamma, n_poles=4, alpha=1.0, beta=0.01, **kw):
    if kind == "slrf":
        return design_slrf(FilterDesignConfig(n_poles, alpha, beta, **kw), gamma)
    return design_quadrature_filter(kind, n_poles, gamma)


def compare_filters(filters, gamma=None):
    """Quality table keyed by filter label.

    For each filter: separation factor, ``max |phi - 1|`` on (0, gamma] and
    ``max |phi|`` on (gamma, 10 gamma], both sampled on a fine grid.
    """
    filters = list(filters)
    if gamma is None:
        gamma = filters[0].gamma
    if any(not math.isclose(F.gamma, gamma) for F in filters):
        raise ValueError("filters must share gamma")
    inside = np.linspace(gamma * 1e-3, gamma, 2001)
    outside = np.linspace(gamma, 10 * gamma, 9001)[1:]
    table = {}
    for F in filters:
        label = F.kind if F.kind != "slrf" else f"slrf(alpha={F.alpha:g},beta={F.beta:g})"
        table[label] = {
            "separation_factor": separation_factor(F),
            "max_inside_deviation": float(np.max(np.abs(eval_filter(F, inside) - 1.0))),
            "max_outside_magnitude": float(np.max(np.abs(eval_filter(F, outside)))),
        }
    return dict(sorted(table.items()))


# ---------------------------------------------------------------------------
# artifacts

def write_filter_json(F, path):
    with open(path, "w") as fh:
        json.dump(F.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_filter_json(path):
    with open(path) as fh:
        return RationalFilter.from_dict(json.load(fh))


def write_filter_curve(F, path, x=None):
    """CSV rows ``(x, phi(x))``; default grid is 601 points on [-gamma, 2 gamma]."""
    if x is None:
        x = np.linspace(-F.gamma, 2 * F.gamma, 601)
    x = np.asarray(x, dtype=float)
    y = eval_filter(F, x)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "phi"])
        for a, b in zip(x, y):
            wr.writerow([repr(float(a)), repr(float(b))])

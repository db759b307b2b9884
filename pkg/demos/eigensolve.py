"""
Twelve eigenpairs of a 1D pencil
================================

Filtered subspace iteration on the linear-element Laplacian, with the
interval end placed between the 12th and 13th eigenvalues.
"""

import numpy as np

from slrf import EigConfig, design_filter, fem1d_eigenvalues, gen_fem1d, solve_eigs

n, k = 400, 12
p = gen_fem1d(n)
lam = fem1d_eigenvalues(n)
gamma = 0.5 * (lam[k - 1] + lam[k])

F = design_filter("slrf", gamma, 4, alpha=1.0, beta=0.01)


def show(it, theta, rho):
    inside = (theta > 0) & (theta <= gamma)
    print(f"iter {it:2d}  {inside.sum():2d} Ritz values inside, max rho {rho[inside].max():.2e}")


rep = solve_eigs(p, F, EigConfig(gamma, k), callback=show)

# %% eigenvalues against the closed-form spectrum
err = np.abs(rep.theta[rep.inside] - lam[:k]) / lam[:k]
print(f"\nconverged={rep.converged} after {rep.outer_iters} iterations, "
      f"max rel err {err.max():.1e}")
print(f"spMV: {rep.spmv_solver} in inner solves, {rep.spmv_total} in total, "
      f"{rep.spmv_avg:.1f} per iteration")
for s in rep.per_pole_stats:
    print(f"  pole {s.pole:.4g}: {s.avg_half_iters:.2f} half-iterations per solve")

"""
What each filter costs
======================

The same eigenproblem solved with every filter kind at N = 4. Iteration
counts measure filter quality; spMV per iteration measures how hard the
shifted systems are.
"""

from slrf import fem2d_eigenvalues, gen_fem2d_grid
from slrf.experiments import filter_economics

nx = 24
p = gen_fem2d_grid(nx, nx)
lam = fem2d_eigenvalues(nx, nx)
gamma = 0.5 * (lam[19] + lam[20])

reports = filter_economics(p, gamma, 20, n_poles=4, alpha=1.0, beta=0.01)

print(f"{'filter':16s} {'Iter':>5s} {'spMV':>8s} {'spMV_avg':>9s}  per-pole half-its")
for kind, r in reports.items():
    per = ", ".join(f"{s.avg_half_iters:.2f}" for s in r.per_pole_stats)
    print(f"{kind:16s} {r.outer_iters:5d} {r.spmv_solver:8d} {r.spmv_avg:9.1f}  [{per}]")

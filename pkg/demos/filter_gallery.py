"""
Filter gallery
==============

Design the four filter kinds at one interval end and compare their shape:
value at gamma, slope at gamma and leakage outside the interval.
"""

import numpy as np

from slrf import design_filter, eval_filter

gamma = 1.0
x = np.linspace(0.0, 10.0, 2001)

# %% quadrature filters put their poles on the circle over [0, gamma];
# the SLRF poles sit on the line x(1 + alpha i)
for N in (2, 3, 4):
    print(f"\nN = {N}")
    print(f"{'kind':16s} {'Phi(g)':>8s} {'|Phi`(g)|':>10s} {'norm slope':>10s} {'max|Phi| x>1.5g':>16s}")
    for kind in ("midpoint", "gauss_legendre", "gauss_chebyshev", "slrf"):
        F = design_filter(kind, gamma, N, alpha=1.0, beta=0.01)
        at_g = eval_filter(F, gamma)
        leak = np.max(np.abs(eval_filter(F, x[x >= 1.5 * gamma])))
        slope = F.separation_factor
        print(f"{kind:16s} {at_g:8.3f} {slope:10.3f} {slope / abs(at_g):10.3f} {leak:16.2e}")

# %% the raw slope rewards filters that sit at 1/2 on gamma; dividing by
# |Phi(gamma)| compares edge sharpness independent of the level there
F = design_filter("slrf", gamma, 4, alpha=1.0, beta=0.01)
print("\nSLRF N=4 poles:", np.round(F.poles, 4))
print("SLRF N=4 weights:", np.round(F.weights, 4))

# %% alpha moves the poles away from the real axis and blunts the edge
for beta in (1.0, 0.01):
    s = [design_filter("slrf", gamma, 4, alpha=a, beta=beta).separation_factor
         for a in (0.5, 1.0, 1.5, 2.0)]
    print(f"beta={beta}: separation factor over alpha 0.5..2:", np.round(s, 3))

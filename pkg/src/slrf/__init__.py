"""Rational-filter subspace iteration for sparse symmetric-definite pencils.

Poles sit on the shifted-Laplace lines ``x(1 +/- alpha i)`` so the shifted
systems stay friendly to ILUT-preconditioned BiCGStab.
"""

__version__ = "0.1.0"

from .sparse import (CsrMatrix, DimensionError, MatrixPencil, Permutation, SpmvCounter,
                     bandwidth, rcm_order, shifted_pencil, spmv)
from .mmio import read_matrix_market, write_matrix_market
from .ilut import IlutBreakdown, IlutFactors, ilut_apply, ilut_factorize
from .krylov import KrylovConfig, ShiftedSolver, SolveStats, Termination, bicgstab
from .filters import (DeltaWeight, FilterDesignConfig, RationalFilter, compare_filters,
                      design_filter, design_quadrature_filter, design_slrf, eval_filter,
                      separation_factor)
from .dense import dense_sym_gep
from .eigensolver import (EigConfig, EigReport, SubspaceCollapse, apply_filter_block,
                          b_orthonormalize, rayleigh_ritz, solve_eigs)
from .problems import (ProblemSpec, fem1d_eigenvalues, fem2d_eigenvalues, gen_diag,
                       gen_fem1d, gen_fem2d_grid, gen_singular_mass, make_problem)

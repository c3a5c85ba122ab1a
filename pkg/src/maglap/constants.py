"""Numerical tolerances shared across the package."""

#: max |H - H^dagger| accepted after assembly
HERMITIAN_TOL = 1e-12
#: eigenpair residual, relative to the operator norm
RESIDUAL_TOL = 1e-8
#: slack on the [0, 2] bound of the normalized spectrum
EIG_BOUND_TOL = 1e-9
#: Gibbs weights / Markov rows must sum to one within this
PROB_SUM_TOL = 1e-12
#: absolute tolerance when deciding that a scatter matrix is singular
SINGULAR_TOL = 1e-12

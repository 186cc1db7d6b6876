"""Sparse regression with additive, column-dependent measurement error.

The package covers data synthesis under the Kronecker-sum covariance model,
the bias-corrected Lasso (composite gradient descent), the compensated
matrix-uncertainty conic selector, penalty calibration, regularity probes and
a Monte-Carlo experiment harness.
"""

from eivlasso.covariance import (
    CovarianceSpec,
    ar1,
    star_block,
    random_precision,
    scale_to_trace,
    sqrt,
    sparse_eigenvalue,
)
from eivlasso.simulate import ProblemInstance, gen_beta, gen_instance
from eivlasso.surrogate import (
    SurrogatePair,
    estimate_tau_B,
    build_surrogate,
    loss_and_gradient,
    oracle_residual,
)
from eivlasso.gd import GdConfig, SolverTrace, Diverged, solve, composite_prox
from eivlasso.conic import ConicConfig, ConicSolution, solve_conic
from eivlasso import constants, diagnostics

__version__ = "0.1.0"

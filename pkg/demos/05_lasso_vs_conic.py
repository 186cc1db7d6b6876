"""Corrected Lasso against the compensated conic estimator on one instance."""

import math

import numpy as np

from eivlasso import covariance as cov
from eivlasso.conic import ConicConfig, solve_conic
from eivlasso.gd import GdConfig, solve
from eivlasso.harness.models import sweep_penalties
from eivlasso.simulate import gen_beta, gen_instance
from eivlasso.surrogate import surrogate_from_instance

m, n, d = 256, 600, 10
A = cov.ar1(m, 0.3)
B = cov.scale_to_trace(cov.ar1(n, 0.3), n, 0.3)
beta_star = gen_beta(m, d, 5.0, seed=3)
pair = surrogate_from_instance(gen_instance(A, B, beta_star, seed=4), trace_A=A.trace)


def rel(b):
    return np.linalg.norm(b - beta_star) / np.linalg.norm(beta_star)


for f in (0.1, 0.2, 0.3, 0.5):
    lam, mu, omega = sweep_penalties(A, B, n, pair.tau_hat_B, 5.0, f)
    bg, _ = solve(pair, GdConfig(lam=lam, R=5.0 * math.sqrt(d), zeta=1.5 * A.lambda_max,
                                 record_trace=False))
    sol = solve_conic(pair, ConicConfig(mu=mu, omega=omega, max_iters=1000, tol_feas=1e-4,
                                        tol_gap=1e-4))
    print(f"f = {f:.1f}: lasso rel l2 {rel(bg):.3f}, conic rel l2 {rel(sol.beta_hat):.3f} "
          f"(t_hat {sol.t_hat:.3f}, {sol.iterations} ADMM steps)")

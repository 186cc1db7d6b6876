"""Population constants, theoretical penalties and the contraction factor.

Everything here is computed from ``A``, ``B`` and the dimensions; no data are
drawn except for the trace estimate that enters the data-driven penalty.
"""

from eivlasso import constants
from eivlasso import covariance as cov
from eivlasso.simulate import gen_beta, gen_instance
from eivlasso.surrogate import surrogate_from_instance

m, n, d = 256, 1200, 10
A = cov.ar1(m, 0.3)
B = cov.scale_to_trace(cov.ar1(n, 0.3), n, 0.3)

reg = constants.compute_regularity(A, B, n)
rates = constants.compute_rates(m, n)
print(f"lambda_min(A) = {reg.lambda_min_A:.3f}, lambda_max(A) = {reg.lambda_max_A:.3f}")
print(f"curvature alpha = {reg.alpha:.3f}, smoothness = {reg.smoothness:.3f}, "
      f"tolerance tau = {reg.tau_tol:.4f}, sparsity level s0 = {reg.s0}")
print(f"sqrt(log m / n) = {rates.log_ratio:.4f}, r_mm = {rates.r_mm:.5f}")

beta_star = gen_beta(m, d, 5.0, seed=0)
pair = surrogate_from_instance(gen_instance(A, B, beta_star, seed=1), trace_A=A.trace)
for variant in ("basic", "oracle"):
    plan = constants.compute_penalty_plan(reg, rates, 5.0, pair.tau_hat_B, variant=variant)
    print(f"{variant:>6}: lambda = {plan.lambda_lasso:.3f}, mu = {plan.mu:.4f}, "
          f"omega = {plan.omega:.4f}")

# the worst-case contraction bound needs far more samples than are used
# here; the iterate-trace demo shows that descent contracts regardless
for label, zeta in (("1.5 lmax", 1.5 * reg.lambda_max_A), ("2 lmax", 2 * reg.lambda_max_A)):
    try:
        c = constants.compute_contraction(reg, d, zeta, R=5.0 * d ** 0.5)
        print(f"zeta = {label}: contraction kappa = {c.kappa:.4f}")
    except constants.InfeasibleContraction as exc:
        print(f"zeta = {label}: no contraction guarantee ({exc})")

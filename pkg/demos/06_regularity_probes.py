"""Searching for violations of the lower and upper restricted-eigenvalue bounds.

Subtracting the trace estimate can make the surrogate gram matrix
indefinite (always so when ``m > n``), yet on sparse directions it should
keep curvature of order ``lambda_min(A)``.  The probes look for a direction that breaks the bound;
finding none is evidence, not proof.
"""

import numpy as np

from eivlasso import constants
from eivlasso import covariance as cov
from eivlasso.diagnostics import (
    cone_top_norm_check, falsify_lower_re, falsify_upper_re, sample_cone,
)
from eivlasso.simulate import gen_beta, gen_instance
from eivlasso.surrogate import surrogate_from_instance

m, n = 128, 1500
A = cov.ar1(m, 0.3)
B = cov.scale_to_trace(cov.ar1(n, 0.3), n, 0.3)
reg = constants.compute_regularity(A, B, n)
G = surrogate_from_instance(gen_instance(A, B, gen_beta(m, 10, 5.0, 0), seed=1),
                            trace_A=A.trace).Gamma_hat
print(f"smallest eigenvalue of the surrogate: {np.linalg.eigvalsh(G)[0]:.3f}")

for probe, level in ((falsify_lower_re, reg.alpha), (falsify_upper_re, reg.smoothness)):
    r = probe(G, level, reg.tau_tol, trials=5000, seed=0)
    print(f"{r.condition}: worst margin {r.worst_margin:.4f} "
          f"({'violated' if r.violated else 'no violation found'})")

# a bound that is far too strong is caught
r = falsify_lower_re(G, 5 * reg.lambda_max_A, 0.0, trials=2000, seed=0)
print(f"with curvature 5 lmax(A): violated = {r.violated}")

V, _ = sample_cone(np.random.default_rng(0), 60, 4, 2.0, 1000)
print("cone vectors obey the top-norm inequality:",
      all(cone_top_norm_check(v, 4, 2.0) for v in V))

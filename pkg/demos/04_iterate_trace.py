"""Geometric convergence of composite gradient descent.

From random starts the optimisation error ``||b^t - b_hat||`` falls linearly
on a log scale, while the statistical error ``||b^t - b*||`` levels off at
the precision of ``b_hat``.  With too few samples (``rho = 1``) the runs do
not settle.
"""

import math

import numpy as np

from eivlasso.harness.config import load_config
from eivlasso.harness.trace import run_iterate_trace

if __name__ == "__main__":
    cfg = load_config("configs/iterate_trace.ini").with_(m=(256,), tau_B=(0.3,), trace_inits=4)
    curves, runs = run_iterate_trace(cfg, rhos=(1, 6, 25), out_dir=None)
    for (_, rho), curve in curves.items():
        t, lo, ls, k = (np.array(c, dtype=float) for c in zip(*curve))
        window = (k == k[0]) & (lo >= lo[0] - math.log(1e4))
        slope = np.polyfit(t[window], lo[window], 1)[0] if window.sum() > 2 else math.nan
        flagged = sum(bool(r["oscillating"]) for r in runs if r["rho"] == rho)
        print(f"rho = {rho:>4}: {len(t) - 1:>5} steps, log-error slope {slope:+.3f}, "
              f"final stat error {math.exp(ls[-1]):.3f}, oscillating runs {flagged}/4")

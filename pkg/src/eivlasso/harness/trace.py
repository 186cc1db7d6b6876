"""Iterate traces of composite gradient descent from random starting points.

For each ``rho`` preset the sample size is ``n = ceil(rho d log m)``.  Each run
draws a fresh instance and a random start inside the l1 ball, records
``log ||b^t - b_hat||`` and ``log ||b^t - b*||`` per iteration, and the curves
are averaged over runs.
"""

import math
import os

import numpy as np
from threadpoolctl import threadpool_limits

from eivlasso.gd import Diverged, GdConfig, solve
from eivlasso.harness import models
from eivlasso.harness.sweep import _map, resolve_workers, write_csv
from eivlasso.rng import derive_seed, generator
from eivlasso.simulate import gen_instance
from eivlasso.surrogate import surrogate_from_instance

TRACE_COLUMNS = ["tau_B", "rho", "n", "t", "log_opt_err", "log_stat_err", "n_runs", "seed"]
RUN_COLUMNS = ["tau_B", "rho", "n", "run", "iterations", "converged", "oscillating",
               "diverged", "final_stat_err", "final_opt_step"]


def trace_n(rho, d, m):
    return int(math.ceil(rho * d * math.log(m)))


def random_start(seed, m, R):
    """Random direction scaled to an l1 norm drawn uniformly from ``[0, R]``."""
    rng = generator(seed, "beta0")
    v = rng.standard_normal(m)
    return v * (rng.uniform() * R / np.abs(v).sum())


def _run_task(payload):
    cfg, m, tau_B, rho, run = payload
    with threadpool_limits(limits=1):
        return _run_body(cfg, m, tau_B, rho, run)


def _run_body(cfg, m, tau_B, rho, run):
    d = cfg.d_for(m)
    n = trace_n(rho, d, m)
    A = models.build_A(cfg, m)
    B = models.build_B(cfg, n, tau_B)
    beta_star = models.beta_for(cfg, m, run)
    bnorm = float(np.linalg.norm(beta_star))
    inst = gen_instance(A, B, beta_star, cfg.sigma_eps, cfg.entry_dist,
                        seed=models.instance_seed(cfg, "trace", m, n, run))
    pair = surrogate_from_instance(inst, trace_A=A.trace)
    lam, _, _ = models.sweep_penalties(A, B, n, pair.tau_hat_B, bnorm, cfg.trace_f,
                                       cfg.omega_factor)
    R = cfg.R_mult[0] * bnorm * math.sqrt(d)
    beta0 = random_start(derive_seed(cfg.master_seed, "trace_init", m, n, tau_B, run), m, R)
    gcfg = GdConfig(lam=lam, R=R, zeta=models.zeta_value(A, cfg.zeta[0]),
                    max_iters=cfg.trace_max_iters, tol_rel_obj=cfg.trace_tol, beta0=beta0)
    res = {"tau_B": tau_B, "rho": rho, "n": n, "run": run, "diverged": False}
    try:
        _, tr = solve(pair, gcfg, beta_star=beta_star)
    except Diverged as exc:
        tr = exc.trace
        res.update(diverged=True, iterations=tr.iterations_run, converged=False,
                   oscillating=True, final_stat_err=math.nan, final_opt_step=math.nan,
                   opt=np.array([]), stat=np.array([]))
        return res
    res.update(iterations=tr.iterations_run, converged=tr.converged,
               oscillating=tr.oscillating, final_stat_err=float(tr.stat_error[-1]),
               final_opt_step=float(np.linalg.norm(tr.iterates[-1] - tr.iterates[-2])),
               opt=tr.opt_error, stat=tr.stat_error)
    return res


def average_logs(runs):
    """Mean log errors per iteration.

    Optimisation error is averaged over runs with a positive error at ``t``
    (it is exactly zero at each run's final iterate); statistical error is
    held at its final value once a run has stopped.
    """
    T = max((len(r["stat"]) for r in runs), default=0)
    rows = []
    for t in range(T):
        opt = [np.log(r["opt"][t]) for r in runs if t < len(r["opt"]) and r["opt"][t] > 0]
        stat = [np.log(r["stat"][min(t, len(r["stat"]) - 1)]) for r in runs if len(r["stat"])]
        rows.append((t, float(np.mean(opt)) if opt else math.nan,
                     float(np.mean(stat)) if stat else math.nan, len(opt)))
    return rows


def run_iterate_trace(cfg, workers=None, out_dir=None, rhos=None, inits=None):
    """Write ``trace.csv`` (averaged curves) and ``trace_runs.csv`` (per-run flags).

    Returns ``(curves, runs)`` where ``curves[(tau_B, rho)]`` is the list of
    ``(t, log_opt_err, log_stat_err, n_runs)`` tuples.
    """
    workers = resolve_workers(workers)
    rhos = tuple(cfg.trace_rho if rhos is None else rhos)
    inits = cfg.trace_inits if inits is None else inits
    m = cfg.m[0]
    payloads = [(cfg, m, tau_B, rho, run)
                for tau_B in cfg.tau_B for rho in rhos for run in range(inits)]
    results = _map(_run_task, payloads, workers)
    curves, trace_rows = {}, []
    for tau_B in cfg.tau_B:
        for rho in rhos:
            runs = [r for r in results if r["tau_B"] == tau_B and r["rho"] == rho]
            curve = average_logs(runs)
            curves[(tau_B, rho)] = curve
            n = runs[0]["n"]
            for t, lo, ls, k in curve:
                trace_rows.append({"tau_B": float(tau_B), "rho": float(rho), "n": n, "t": t,
                                   "log_opt_err": lo, "log_stat_err": ls, "n_runs": k,
                                   "seed": cfg.master_seed})
    out_dir = out_dir or cfg.output_dir
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(os.path.join(out_dir, "trace.csv"), trace_rows, TRACE_COLUMNS)
        run_rows = [{k: (float(v) if isinstance(v, (float, np.floating)) else v)
                     for k, v in r.items() if k in RUN_COLUMNS} for r in results]
        for r in run_rows:
            r["rho"] = float(r["rho"])
            r["tau_B"] = float(r["tau_B"])
        write_csv(os.path.join(out_dir, "trace_runs.csv"), run_rows, RUN_COLUMNS)
    return curves, results

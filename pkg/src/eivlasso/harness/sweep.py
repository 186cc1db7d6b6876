"""Penalty/sample-size sweeps with per-cell seeding and CSV output.

A cell is one combination of ``(estimator, m, n, tau_B, f, zeta, R_mult)``.
Instances depend only on ``(master_seed, m, n, d, models, trial)``, so every
estimator and penalty setting sees the same draws and no cell's numbers
depend on which other cells are in the grid.
"""

import csv
import math
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
import multiprocessing

import numpy as np
from threadpoolctl import threadpool_limits

from eivlasso.conic import ConicConfig, ConicWorkspace, InfeasibleProblem, solve_conic
from eivlasso.gd import Diverged, GdConfig, solve
from eivlasso.harness import models
from eivlasso.harness.config import ConfigError
from eivlasso.simulate import gen_instance
from eivlasso.surrogate import surrogate_from_instance

SCHEMA_VERSION = 1
SWEEP_COLUMNS = [
    "schema_version", "estimator", "A_model", "rho_A", "B_model", "rho_Bstar",
    "tau_B", "m", "n", "d", "rescaled_n", "f", "zeta_label", "zeta_mult", "R_mult",
    "trials", "n_ok", "failures", "rel_l1_error", "rel_l1_stderr",
    "rel_l2_error", "rel_l2_stderr", "tau_hat_B_mean", "penalty_mean",
    "iterations_mean", "converged_frac",
]
RUNTIME_COLUMNS = ["estimator", "m", "n", "tau_B", "f", "zeta_label", "R_mult", "runtime_ms"]


def resolve_workers(workers=None):
    """``EIV_THREADS`` overrides the flag; default 1."""
    env = os.environ.get("EIV_THREADS")
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError("EIV_THREADS", f"expected an integer, got {env!r}") from None
    workers = 1 if workers is None else int(workers)
    if workers < 1:
        raise ConfigError("workers", "must be at least 1")
    return workers


def _estimators(cfg):
    return ("lasso_gd", "conic") if cfg.estimator == "both" else (cfg.estimator,)


def _trial_task(payload):
    """All solves for one ``(m, n, tau_B, trial)``; returns a list of records."""
    cfg, m, n, tau_B, trial = payload
    with threadpool_limits(limits=1):
        return _trial_body(cfg, m, n, tau_B, trial)


def _trial_body(cfg, m, n, tau_B, trial):
    A = models.build_A(cfg, m)
    B = models.build_B(cfg, n, tau_B)
    beta_star = models.beta_for(cfg, m, trial)
    d = cfg.d_for(m)
    bnorm = float(np.linalg.norm(beta_star))
    inst = gen_instance(A, B, beta_star, cfg.sigma_eps, cfg.entry_dist,
                        seed=models.instance_seed(cfg, "sweep", m, n, trial))
    pair = surrogate_from_instance(inst, trace_A=A.trace)
    out = []
    ests = _estimators(cfg)
    if "lasso_gd" in ests:
        for zl in cfg.zeta:
            zeta = models.zeta_value(A, zl)
            for rm in cfg.R_mult:
                R = rm * bnorm * math.sqrt(d)
                for f in cfg.f:
                    lam, _, _ = models.sweep_penalties(A, B, n, pair.tau_hat_B, bnorm, f,
                                                       cfg.omega_factor)
                    t0 = time.perf_counter()
                    rec = {"estimator": "lasso_gd", "f": f, "zeta_label": str(zl),
                           "zeta_mult": zeta / A.lambda_max, "R_mult": rm,
                           "tau_hat_B": pair.tau_hat_B, "penalty": lam}
                    try:
                        bh, tr = solve(pair, GdConfig(lam=lam, R=R, zeta=zeta,
                                                      max_iters=cfg.gd_max_iters,
                                                      tol_rel_obj=cfg.gd_tol,
                                                      record_trace=False))
                        rec["rel_l1"], rec["rel_l2"] = models.rel_errors(bh, beta_star)
                        rec["iterations"] = tr.iterations_run
                        rec["converged"] = tr.converged
                        rec["failure"] = None
                    except (Diverged, FloatingPointError, np.linalg.LinAlgError) as exc:
                        rec["failure"] = type(exc).__name__
                    rec["runtime_ms"] = 1e3 * (time.perf_counter() - t0)
                    out.append(rec)
    if "conic" in ests:
        ws = ConicWorkspace(pair)
        for f in cfg.f:
            _, mu, omega = models.sweep_penalties(A, B, n, pair.tau_hat_B, bnorm, f,
                                                  cfg.omega_factor)
            t0 = time.perf_counter()
            rec = {"estimator": "conic", "f": f, "zeta_label": "", "zeta_mult": None,
                   "R_mult": None, "tau_hat_B": pair.tau_hat_B, "penalty": mu}
            try:
                sol = solve_conic(pair, ConicConfig(
                    mu=mu, omega=omega, lambda_conic=cfg.lambda_conic,
                    max_iters=cfg.conic_max_iters, tol_feas=cfg.conic_tol,
                    tol_gap=cfg.conic_tol), workspace=ws)
                rec["rel_l1"], rec["rel_l2"] = models.rel_errors(sol.beta_hat, beta_star)
                rec["iterations"] = sol.iterations
                rec["converged"] = sol.converged
                rec["failure"] = None
            except (InfeasibleProblem, FloatingPointError, np.linalg.LinAlgError) as exc:
                rec["failure"] = type(exc).__name__
            rec["runtime_ms"] = 1e3 * (time.perf_counter() - t0)
            out.append(rec)
    for rec in out:
        rec.update(m=m, n=n, d=d, tau_B=tau_B, trial=trial)
    return out


def _map(fn, payloads, workers):
    if workers == 1:
        return [fn(p) for p in payloads]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
        return list(ex.map(fn, payloads, chunksize=1))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _mean_se(vals):
    vals = np.asarray(vals, dtype=float)
    if vals.size == 0:
        return math.nan, math.nan
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
    return float(vals.mean()), se


def aggregate(cfg, records):
    """One row per cell, in a fixed grid order."""
    cells = defaultdict(list)
    for rec in records:
        key = (rec["estimator"], rec["m"], rec["n"], rec["tau_B"], rec["f"],
               rec["zeta_label"], rec["R_mult"])
        cells[key].append(rec)
    rows = []
    est_order = {e: i for i, e in enumerate(("lasso_gd", "conic"))}
    for key in sorted(cells, key=lambda k: (est_order[k[0]], k[1], k[2], k[3],
                                            str(k[5]), k[6] or 0.0, k[4])):
        recs = sorted(cells[key], key=lambda r: r["trial"])
        ok = [r for r in recs if r["failure"] is None]
        est, m, n, tau_B, f, zl, rm = key
        l1, l1se = _mean_se([r["rel_l1"] for r in ok])
        l2, l2se = _mean_se([r["rel_l2"] for r in ok])
        d = recs[0]["d"]
        fails = sorted({r["failure"] for r in recs if r["failure"]})
        rows.append({
            "schema_version": SCHEMA_VERSION, "estimator": est,
            "A_model": cfg.A_family, "rho_A": cfg.A_rho if cfg.A_family != "identity" else 0.0,
            "B_model": cfg.B_family, "rho_Bstar": cfg.B_rho if cfg.B_family == "ar1" else None,
            "tau_B": float(tau_B), "m": m, "n": n, "d": d,
            "rescaled_n": n / (d * math.log(m)), "f": float(f), "zeta_label": zl,
            "zeta_mult": recs[0]["zeta_mult"], "R_mult": rm,
            "trials": len(recs), "n_ok": len(ok),
            "failures": ";".join(f"{name}:{sum(r['failure'] == name for r in recs)}"
                                 for name in fails),
            "rel_l1_error": l1, "rel_l1_stderr": l1se,
            "rel_l2_error": l2, "rel_l2_stderr": l2se,
            "tau_hat_B_mean": float(np.mean([r["tau_hat_B"] for r in recs])),
            "penalty_mean": float(np.mean([r["penalty"] for r in recs])),
            "iterations_mean": float(np.mean([r["iterations"] for r in ok])) if ok else math.nan,
            "converged_frac": float(np.mean([bool(r["converged"]) for r in ok])) if ok else math.nan,
            "runtime_ms": float(sum(r["runtime_ms"] for r in recs)),
        })
    return rows


def write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def run_sweep(cfg, workers=None, out_dir=None):
    """Run every cell of ``cfg``; write ``sweep.csv`` (and ``runtime.csv``).

    Wall-clock timings go to the separate ``runtime.csv`` so that
    ``sweep.csv`` is byte-identical across runs and worker counts.
    """
    if not cfg.n and not cfg.n_rescaled:
        raise ConfigError("dims.n", "a sweep needs dims.n or dims.n_rescaled")
    workers = resolve_workers(workers)
    payloads = [(cfg, m, n, tau_B, trial)
                for m in cfg.m for n in cfg.n_values(m) for tau_B in cfg.tau_B
                for trial in range(cfg.trials)]
    records = [r for batch in _map(_trial_task, payloads, workers) for r in batch]
    rows = aggregate(cfg, records)
    out_dir = out_dir or cfg.output_dir
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(os.path.join(out_dir, "sweep.csv"), rows, SWEEP_COLUMNS)
        write_csv(os.path.join(out_dir, "runtime.csv"), rows, RUNTIME_COLUMNS)
    return rows

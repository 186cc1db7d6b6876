"""Composite gradient descent for the corrected Lasso.

Solves ``min 0.5 b^T G b - g^T b + lam ||b||_1`` over ``||b||_1 <= R`` with the
update ``b <- prox(b - (G b - g) / zeta)``, where the prox of the penalty plus
the ball indicator is a single soft threshold.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-10


class Diverged(RuntimeError):
    """Objective blew past ``growth`` times its starting magnitude."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def soft_threshold(v, kappa):
    if kappa < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def _l1_threshold(a, R):
    """Smallest ``theta >= 0`` with ``sum (a - theta)_+ <= R`` for ``a >= 0``."""
    u = np.sort(a)[::-1]
    css = np.cumsum(u) - R
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u * k > css)[0][-1]
    return max(css[rho] / (rho + 1.0), 0.0)


def project_l1_ball(v, R):
    """Euclidean projection onto ``{x : ||x||_1 <= R}`` (sort-and-threshold)."""
    if R <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= R:
        return v.copy()
    theta = _l1_threshold(a, R)
    out = np.sign(v) * np.maximum(a - theta, 0.0)
    # rounding in the threshold can leave the norm a hair above R
    s = np.abs(out).sum()
    if s > R:
        out *= R / s
    return out


def composite_prox(v, lambda_over_zeta, R):
    """``argmin_{||b||_1 <= R} 0.5 ||b - v||^2 + k ||b||_1``.

    Soft-thresholding at ``k`` and then at an extra ``theta`` equals one soft
    threshold at ``k + theta``, so the answer is the ball projection of the
    soft-thresholded point.
    """
    return project_l1_ball(soft_threshold(v, lambda_over_zeta), R)


@dataclass
class GdConfig:
    lam: float
    R: float
    zeta: float
    max_iters: int = 5000
    tol_rel_obj: float = 1e-9
    record_trace: bool = True
    beta0: np.ndarray = None
    window: int = 10
    growth: float = 1e6

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.zeta <= 0:
            raise ValueError("zeta must be positive")
        if self.max_iters < 1 or self.window < 1:
            raise ValueError("max_iters and window must be positive")
        if self.tol_rel_obj <= 0:
            raise ValueError("tol_rel_obj must be positive")


@dataclass
class SolverTrace:
    """Per-iteration objective and errors; index ``t`` runs over ``0..iterations_run``.

    ``opt_error`` is ``||b^t - b_final||_2`` (filled after the run) and
    ``stat_error`` is ``||b^t - b*||_2`` when the truth was supplied.
    """

    objective: np.ndarray
    iterates: np.ndarray = None
    opt_error: np.ndarray = None
    stat_error: np.ndarray = None
    iterations_run: int = 0
    converged: bool = False
    oscillating: bool = False
    extras: dict = field(default_factory=dict)

    def to_csv(self, path):
        n_rows = self.iterations_run + 1
        cols = {
            "t": np.arange(n_rows),
            "objective": self.objective,
            "opt_error": self.opt_error if self.opt_error is not None else [np.nan] * n_rows,
            "stat_error": self.stat_error if self.stat_error is not None else [np.nan] * n_rows,
        }
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(cols))
            for row in zip(*cols.values()):
                w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])


def objective(pair, beta, lam):
    Gb = pair.Gamma_hat @ beta
    return 0.5 * float(beta @ Gb) - float(pair.gamma_hat @ beta) + lam * float(np.abs(beta).sum())


def _is_oscillating(phi, window, tol):
    """Objective moved up by more than the stopping tolerance in the last window."""
    tail = phi[-(window + 1):]
    scale = tol * max(1.0, float(np.max(np.abs(tail))))
    return bool(np.any(np.diff(tail) > scale))


def solve(pair, cfg, beta_star=None):
    """Run composite gradient descent; return ``(beta_hat, SolverTrace)``.

    Stops when every change ``|phi_s - phi_{s-1}|`` over the last ``window``
    steps is at most ``tol * max(1, |phi_t|)``, or after ``max_iters`` updates.
    A run that hits the cap while its objective still rises on some step of
    the final window is marked ``oscillating``.
    """
    m = pair.m
    G, g = pair.Gamma_hat, pair.gamma_hat
    beta = np.zeros(m) if cfg.beta0 is None else np.asarray(cfg.beta0, dtype=float).copy()
    if beta.shape != (m,):
        raise ValueError(f"beta0 has shape {beta.shape}, expected ({m},)")
    if beta_star is not None and np.shape(beta_star) != (m,):
        raise ValueError("beta_star has the wrong length")
    if np.abs(beta).sum() > cfg.R:
        beta = project_l1_ball(beta, cfg.R)

    step = 1.0 / cfg.zeta
    k = cfg.lam * step
    phi = [objective(pair, beta, cfg.lam)]
    limit = cfg.growth * max(abs(phi[0]), 1.0)
    iterates = [beta.copy()] if cfg.record_trace else None
    converged = False
    t = 0
    for t in range(1, cfg.max_iters + 1):
        beta = composite_prox(beta - step * (G @ beta - g), k, cfg.R)
        phi.append(objective(pair, beta, cfg.lam))
        if iterates is not None:
            iterates.append(beta.copy())
        if not np.isfinite(phi[-1]) or abs(phi[-1]) > limit:
            trace = SolverTrace(objective=np.array(phi), iterations_run=t)
            raise Diverged(f"objective {phi[-1]:.3e} exceeded {limit:.3e} at t={t}", trace)
        if t >= cfg.window:
            # every step in the window must be small: a period-2 cycle has
            # phi_t == phi_{t-10} but is not converged
            tail = np.diff(phi[-1 - cfg.window:])
            if np.max(np.abs(tail)) <= cfg.tol_rel_obj * max(1.0, abs(phi[-1])):
                converged = True
                break

    phi = np.array(phi)
    trace = SolverTrace(objective=phi, iterations_run=t, converged=converged)
    if not converged:
        trace.oscillating = _is_oscillating(phi, cfg.window, cfg.tol_rel_obj)
    if iterates is not None:
        its = np.array(iterates)
        trace.iterates = its
        trace.opt_error = np.linalg.norm(its - beta, axis=1)
        if beta_star is not None:
            trace.stat_error = np.linalg.norm(its - np.asarray(beta_star), axis=1)
    return beta, trace

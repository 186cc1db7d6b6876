"""Conic compensated matrix-uncertainty selector.

Solves ``min ||b||_1 + lam t`` subject to ``||g - G b||_inf <= mu t + omega`` and
``||b||_2 <= t`` with over-relaxed consensus ADMM.  The variable ``(b, t)`` is
copied into three blocks: a second-order-cone copy, an l1-plus-linear copy, and
a residual copy ``(r, t)`` with ``r = g - G b`` kept in the scaled sup-norm cone.
Each block update is a closed-form projection or prox; the coupling step is a
linear solve that reuses one eigendecomposition of ``G``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NotConverged(RuntimeError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class InfeasibleProblem(RuntimeError):
    pass


@dataclass
class ConicConfig:
    mu: float
    omega: float
    lambda_conic: float = 1.0
    max_iters: int = 20000
    tol_feas: float = 1e-6
    tol_gap: float = 1e-6
    admm_rho: float = 1.0
    relax: float = 1.6
    check_every: int = 10
    adaptive_rho: bool = False

    def __post_init__(self):
        if self.mu < 0 or self.omega < 0:
            raise ValueError("mu and omega must be nonnegative")
        if self.lambda_conic <= 0:
            raise ValueError("lambda_conic must be positive")
        if min(self.tol_feas, self.tol_gap, self.admm_rho) <= 0:
            raise ValueError("tolerances and admm_rho must be positive")
        if not 0 < self.relax < 2:
            raise ValueError("relax must lie in (0, 2)")


@dataclass
class ConicSolution:
    beta_hat: np.ndarray
    t_hat: float
    objective: float
    feas_residual: float
    iterations: int
    converged: bool


class ConicWorkspace:
    """Eigendecomposition of ``Gamma_hat`` shared by solves on one surrogate."""

    def __init__(self, pair):
        w, Q = scipy.linalg.eigh(pair.Gamma_hat, driver="evd")
        self.pair = pair
        self.w = w
        self.Q = Q
        self.Qt_g = Q.T @ pair.gamma_hat


def check_cone_constraint(pair, beta, t, mu, omega):
    """``max(0, ||g - G b||_inf - mu t - omega, ||b||_2 - t)``."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (pair.m,):
        raise ValueError("beta has the wrong length")
    resid = float(np.max(np.abs(pair.gamma_hat - pair.Gamma_hat @ beta)))
    return max(0.0, resid - mu * t - omega, float(np.linalg.norm(beta)) - t)


def project_soc(v, s):
    """Projection onto ``{(v, s) : ||v||_2 <= s}``."""
    nv = float(np.linalg.norm(v))
    if nv <= s:
        return v.copy(), float(s)
    if nv <= -s:
        return np.zeros_like(v), 0.0
    c = 0.5 * (nv + s)
    return v * (c / nv), c


def project_inf_cone(r0, s0, mu, omega):
    """Projection onto ``{(r, s) : ||r||_inf <= mu s + omega}``.

    For fixed ``s`` the best ``r`` clips ``r0`` to ``+-h`` with ``h = mu s + omega``;
    the remaining scalar equation ``s - s0 = mu sum (|r0_i| - h)_+`` is solved
    exactly by walking the sorted breakpoints.
    """
    if mu == 0:
        return np.clip(r0, -omega, omega), float(s0)
    a = np.sort(np.abs(r0))[::-1]
    s_floor = -omega / mu
    if s_floor - s0 >= mu * a.sum():
        return np.zeros_like(r0), s_floor
    k = np.arange(a.size + 1)
    S = np.concatenate(([0.0], np.cumsum(a)))
    s = (s0 + mu * S - k * mu * omega) / (1.0 + k * mu * mu)
    h = mu * s + omega
    upper = np.concatenate(([np.inf], a))
    lower = np.concatenate((a, [0.0]))
    ok = (h <= upper) & (h >= lower)
    j = int(np.argmax(ok)) if ok.any() else a.size
    sj, hj = float(s[j]), max(float(h[j]), 0.0)
    return np.clip(r0, -hj, hj), sj


def _polish(pair, beta, mu, omega):
    """Smallest ``t`` making ``(beta, t)`` feasible when ``mu > 0``."""
    resid = float(np.max(np.abs(pair.gamma_hat - pair.Gamma_hat @ beta)))
    t = float(np.linalg.norm(beta))
    if mu > 0:
        t = max(t, max(resid - omega, 0.0) / mu)
    return t


def solve_conic(pair, cfg, workspace=None, strict=False):
    """Solve the conic program; returns a :class:`ConicSolution`.

    ``t_hat`` is polished to the smallest feasible value for the returned
    ``beta_hat``.  With ``strict`` a non-converged run raises
    :class:`NotConverged` carrying the best iterate.
    """
    ws = workspace if workspace is not None else ConicWorkspace(pair)
    m = pair.m
    g = pair.gamma_hat
    Q, w, Qt_g = ws.Q, ws.w, ws.Qt_g
    lam, mu, omega = cfg.lambda_conic, cfg.mu, cfg.omega
    rho, a = cfg.admm_rho, cfg.relax
    denom = 2.0 + w * w

    if not np.any(g) or np.max(np.abs(g)) <= omega:
        # zero is feasible and the objective is nonnegative
        return ConicSolution(np.zeros(m), 0.0, 0.0, 0.0, 0, True)

    b1 = np.zeros(m); t1 = 0.0; u1 = np.zeros(m); v1 = 0.0
    b3 = np.zeros(m); t3 = 0.0; u3 = np.zeros(m); v3 = 0.0
    r = g.copy(); t2 = 0.0; ur = np.zeros(m); v2 = 0.0
    ur_hist = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        # coupling step: (2I + G^2) b = (b1 - u1) + (b3 - u3) + G (g - r + ur)
        rhs_c = Q.T @ np.column_stack((b1 - u1 + b3 - u3, r - ur))
        c = (rhs_c[:, 0] + w * (Qt_g - rhs_c[:, 1])) / denom
        bG = Q @ np.column_stack((c, w * c))
        beta, Gb = bG[:, 0], bG[:, 1]
        t = ((t1 - v1) + (t2 - v2) + (t3 - v3)) / 3.0
        res = g - Gb

        # relaxed block inputs
        hb1 = a * beta + (1 - a) * b1
        hb3 = a * beta + (1 - a) * b3
        hr = a * res + (1 - a) * r
        ht1 = a * t + (1 - a) * t1
        ht2 = a * t + (1 - a) * t2
        ht3 = a * t + (1 - a) * t3

        old = (b1, b3, r, t1, t2, t3)
        b1, t1 = project_soc(hb1 + u1, ht1 + v1)
        q = hb3 + u3
        b3 = np.sign(q) * np.maximum(np.abs(q) - 1.0 / rho, 0.0)
        t3 = max(ht3 + v3 - lam / rho, 0.0)
        r, t2 = project_inf_cone(hr + ur, ht2 + v2, mu, omega)

        u1 += hb1 - b1; v1 += ht1 - t1
        u3 += hb3 - b3; v3 += ht3 - t3
        ur += hr - r; v2 += ht2 - t2

        if it % cfg.check_every:
            continue
        p_res = np.sqrt(
            np.sum((beta - b1) ** 2) + np.sum((beta - b3) ** 2) + np.sum((res - r) ** 2)
            + (t - t1) ** 2 + (t - t2) ** 2 + (t - t3) ** 2
        )
        db = -(b1 - old[0]) - (b3 - old[1]) + pair.Gamma_hat @ (r - old[2])
        dt = (t1 - old[3]) + (t2 - old[4]) + (t3 - old[5])
        d_res = rho * np.sqrt(np.sum(db * db) + dt * dt)
        p_scale = max(1.0, np.linalg.norm(beta), np.linalg.norm(g), abs(t))
        d_scale = max(1.0, rho * np.sqrt(np.sum(u1 ** 2) + np.sum(u3 ** 2)
                                         + np.sum(ur ** 2)))
        ur_hist.append(float(np.linalg.norm(ur)))
        if p_res <= cfg.tol_feas * p_scale and d_res <= cfg.tol_gap * d_scale:
            converged = True
            break
        if cfg.adaptive_rho:
            # the coupling solve does not involve rho, so rebalancing only
            # rescales the scaled duals
            ratio = (p_res / p_scale) / max(d_res / d_scale, 1e-300)
            if ratio > 10 or ratio < 0.1:
                f = 2.0 if ratio > 10 else 0.5
                rho *= f
                u1 /= f; v1 /= f; u3 /= f; v3 /= f; ur /= f; v2 /= f

    beta = b3 if mu == 0 else beta
    t_hat = _polish(pair, beta, mu, omega)
    feas = check_cone_constraint(pair, beta, t_hat, mu, omega)
    sol = ConicSolution(
        beta_hat=beta, t_hat=t_hat,
        objective=float(np.abs(beta).sum() + lam * t_hat),
        feas_residual=feas, iterations=it, converged=converged,
    )
    if mu == 0 and not converged and len(ur_hist) >= 4:
        half = ur_hist[len(ur_hist) // 2]
        if feas > cfg.tol_feas and ur_hist[-1] > 1.5 * half > 0:
            raise InfeasibleProblem(
                f"residual stays {feas:.3e} above omega while the dual keeps growing"
            )
    if strict and not converged:
        raise NotConverged(f"no convergence in {cfg.max_iters} iterations", sol)
    return sol

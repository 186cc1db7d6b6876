"""Bias-corrected moments and the corrected quadratic loss."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class SurrogatePair:
    """``Gamma_hat = X^T X / n - tau_hat_B I`` and ``gamma_hat = X^T y / n``."""

    Gamma_hat: np.ndarray
    gamma_hat: np.ndarray
    tau_hat_B: float
    n: int
    m: int


def estimate_tau_B(X, trace_A):
    """``(||X||_F^2 - n tr(A))_+ / (m n)``; the clamp acts on the trace estimate."""
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    trB_hat = max(float(np.sum(X * X)) - n * trace_A, 0.0) / m
    return trB_hat / n


def build_surrogate(X, y, tau_hat_B):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"dimension mismatch: X {X.shape}, y {y.shape}")
    if tau_hat_B < 0:
        raise ValueError("tau_hat_B must be nonnegative")
    n, m = X.shape
    G = X.T @ X / n
    G[np.diag_indices(m)] -= tau_hat_B
    G = 0.5 * (G + G.T)
    return SurrogatePair(Gamma_hat=G, gamma_hat=X.T @ y / n,
                         tau_hat_B=float(tau_hat_B), n=n, m=m)


def surrogate_from_instance(inst, trace_A=None, known_tau_B=None):
    """Surrogate pair with ``tau_hat_B`` estimated from ``X`` unless given."""
    if known_tau_B is not None:
        tau = known_tau_B
    else:
        tr_a = trace_A if trace_A is not None else (inst.trace_A or inst.m)
        tau = estimate_tau_B(inst.X, tr_a)
    return build_surrogate(inst.X, inst.y, tau)


def loss_and_gradient(pair, beta):
    """``(0.5 b^T G b - g^T b, G b - g)``."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (pair.m,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({pair.m},)")
    Gb = pair.Gamma_hat @ beta
    return 0.5 * float(beta @ Gb) - float(pair.gamma_hat @ beta), Gb - pair.gamma_hat


def oracle_residual(pair, beta_star):
    """``||gamma_hat - Gamma_hat beta*||_inf``, the gradient sup-norm at the truth."""
    beta_star = np.asarray(beta_star, dtype=float)
    if beta_star.shape != (pair.m,):
        raise ValueError("beta_star has the wrong length")
    return float(np.max(np.abs(pair.gamma_hat - pair.Gamma_hat @ beta_star)))

"""Covariance construction, penalty choices and seeding shared by the runners."""

import math
import threading

import numpy as np

from eivlasso import covariance as cov
from eivlasso.rng import derive_seed
from eivlasso.simulate import gen_beta

_CACHE = {}
_LOCK = threading.Lock()


def _cached(key, build):
    with _LOCK:
        hit = _CACHE.get(key)
    if hit is None:
        hit = build()
        with _LOCK:
            hit = _CACHE.setdefault(key, hit)
    return hit


def a_key(cfg):
    if cfg.A_family == "star_block":
        return ("star_block", cfg.A_rho, cfg.A_hub_block, cfg.A_n_blocks)
    if cfg.A_family == "identity":
        return ("identity",)
    return ("ar1", cfg.A_rho)


def b_key(cfg):
    if cfg.B_family == "random_precision":
        return ("random_precision", cfg.B_seed)
    if cfg.B_family in ("identity", "zero"):
        return (cfg.B_family,)
    return ("ar1", cfg.B_rho)


def build_A(cfg, m):
    def make():
        if cfg.A_family == "star_block":
            return cov.star_block(m, cfg.A_rho, cfg.A_hub_block, cfg.A_n_blocks)
        if cfg.A_family == "identity":
            return cov.identity(m)
        return cov.ar1(m, cfg.A_rho)
    return _cached(("A", m) + a_key(cfg), make)


def _base_B(cfg, n):
    def make():
        if cfg.B_family == "random_precision":
            return cov.random_precision(n, seed=cfg.B_seed)
        if cfg.B_family == "identity":
            return cov.identity(n)
        return cov.ar1(n, cfg.B_rho)
    return _cached(("Bbase", n) + b_key(cfg), make)


def _evict_other_n(n):
    """Drop cached ``n x n`` matrices for other sample sizes.

    Tasks are ordered by ``n``, so this keeps memory at one size's worth of
    dense ``B`` factors per process instead of the whole grid's.
    """
    with _LOCK:
        for key in [k for k in _CACHE if k[0] in ("B", "Bbase", "Bzero") and k[1] != n]:
            del _CACHE[key]


def build_B(cfg, n, tau_B):
    """``B`` rescaled to ``tr(B)/n = tau_B``; spectrum and root reuse the base ones."""
    _evict_other_n(n)
    if cfg.B_family == "zero" or tau_B == 0:
        return _cached(("Bzero", n), lambda: cov.zeros(n))

    def make():
        base = _base_B(cfg, n)
        base.sqrt()  # populate the spectrum and root once per n
        return cov.scale_to_trace(base, n, tau_B)
    return _cached(("B", n, tau_B) + b_key(cfg), make)


def zeta_value(A, label):
    """Step presets ``lmax + lmin/2``, ``1.5 lmax``, ``2 lmax`` or ``mult * lmax``."""
    if label == "zeta1":
        return A.lambda_max + 0.5 * A.lambda_min
    if label == "zeta2":
        return 1.5 * A.lambda_max
    if label == "zeta3":
        return 2.0 * A.lambda_max
    return float(label) * A.lambda_max


def sweep_penalties(A, B, n, tau_hat_B, beta_norm, f, omega_factor=0.1):
    """``(lam, mu, omega)`` for the penalty-factor sweep.

    ``omega = c D0 sqrt(log m / n)``, ``mu = f D0' tau_hat^{1/2} sqrt(log m / n)``
    and ``lam = mu ||beta*|| + omega``.
    """
    m = A.dim
    lr = math.sqrt(math.log(m) / n)
    sq_a = math.sqrt(A.max_diag)
    D0 = math.sqrt(B.trace / n) + sq_a
    D0p = math.sqrt(B.op_norm) + sq_a
    omega = omega_factor * D0 * lr
    mu = f * D0p * math.sqrt(tau_hat_B) * lr
    return mu * beta_norm + omega, mu, omega


def beta_for(cfg, m, trial=None):
    """Fixed per ``(m, d, A model)`` unless ``beta_per_trial``."""
    d = cfg.d_for(m)
    idx = (m, d) + a_key(cfg)
    if cfg.beta_per_trial and trial is not None:
        idx = idx + (trial,)
    return gen_beta(m, d, cfg.beta_length, derive_seed(cfg.master_seed, "beta", *idx))


def instance_seed(cfg, tag, m, n, trial):
    """Shared across ``tau_B`` and penalty settings (common random numbers)."""
    return derive_seed(cfg.master_seed, tag, m, n, cfg.d_for(m), *a_key(cfg),
                       *b_key(cfg), cfg.entry_dist, trial)


def rel_errors(beta, beta_star):
    diff = np.asarray(beta) - beta_star
    return (float(np.abs(diff).sum() / np.abs(beta_star).sum()),
            float(np.linalg.norm(diff) / np.linalg.norm(beta_star)))

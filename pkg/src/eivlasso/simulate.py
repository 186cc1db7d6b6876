"""Problem instances from the additive errors-in-variables model.

``X0 = Z1 A^{1/2}`` has independent rows, ``W = B^{1/2} Z2`` has independent
columns, ``X = X0 + W`` is observed and ``y = X0 beta* + eps``.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from eivlasso.covariance import CovarianceSpec
from eivlasso.rng import generator

BETA_MAGNITUDES = "uniform[0.5,1] then rescaled"


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    X: np.ndarray
    y: np.ndarray
    beta_star: np.ndarray
    seed: int
    d: int
    sigma_eps: float
    X0: np.ndarray = None
    W: np.ndarray = None
    eps: np.ndarray = None
    A_spec: CovarianceSpec = None
    B_spec: CovarianceSpec = None
    entry_dist: str = "gaussian"
    trace_A: float = None

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.X.shape[1]

    @property
    def tau_B(self):
        return self.B_spec.trace / self.n if self.B_spec is not None else None


def gen_beta(m, d, length=5.0, seed=0):
    """``d``-sparse vector with uniformly random support and ``||beta||_2 = length``.

    Nonzero entries get independent random signs and magnitudes drawn from
    U[0.5, 1] before the rescaling.
    """
    if not 1 <= d <= m:
        raise ValueError(f"need 1 <= d <= m, got d={d}, m={m}")
    if length <= 0:
        raise ValueError("length must be positive")
    rng = generator(seed, "beta")
    support = rng.choice(m, size=d, replace=False)
    vals = rng.uniform(0.5, 1.0, size=d) * rng.choice([-1.0, 1.0], size=d)
    beta = np.zeros(m)
    beta[support] = vals * (length / np.linalg.norm(vals))
    return beta


def _entries(rng, shape, entry_dist):
    if entry_dist == "gaussian":
        return rng.standard_normal(shape)
    if entry_dist == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=shape)
    raise ValueError(f"unknown entry distribution {entry_dist!r}")


def gen_instance(A, B, beta_star, sigma_eps=1.0, entry_dist="gaussian", seed=0):
    """Draw ``(X0, W, X, y, eps)`` for fixed covariances and ``beta_star``.

    ``Z1``, ``Z2`` and ``eps`` come from separate Philox streams derived from
    ``seed``, so the instance is a pure function of its inputs.
    """
    beta_star = np.asarray(beta_star, dtype=float)
    m, n = A.dim, B.dim
    if beta_star.shape != (m,):
        raise ValueError(f"beta_star has shape {beta_star.shape}, expected ({m},)")
    if sigma_eps < 0:
        raise ValueError("sigma_eps must be nonnegative")
    Z1 = _entries(generator(seed, "Z1"), (n, m), entry_dist)
    Z2 = _entries(generator(seed, "Z2"), (n, m), entry_dist)
    eps = sigma_eps * generator(seed, "eps").standard_normal(n)
    X0 = Z1 @ A.sqrt()
    W = np.zeros((n, m)) if B.is_zero else B.sqrt() @ Z2
    X = X0 + W
    y = X0 @ beta_star + eps
    return ProblemInstance(
        X=X, y=y, beta_star=beta_star, seed=int(seed),
        d=int(np.count_nonzero(beta_star)), sigma_eps=float(sigma_eps),
        X0=X0, W=W, eps=eps, A_spec=A, B_spec=B, entry_dist=entry_dist,
        trace_A=A.trace,
    )


def save_instance(inst, directory, extra_meta=None):
    """Write ``X.csv``, ``y.csv``, ``beta_star.csv`` and ``meta.json``."""
    os.makedirs(directory, exist_ok=True)
    np.savetxt(os.path.join(directory, "X.csv"), inst.X, delimiter=",", fmt="%.17g")
    np.savetxt(os.path.join(directory, "y.csv"), inst.y, delimiter=",", fmt="%.17g")
    np.savetxt(os.path.join(directory, "beta_star.csv"), inst.beta_star,
               delimiter=",", fmt="%.17g")
    meta = {
        "n": inst.n, "m": inst.m, "d": inst.d, "seed": inst.seed,
        "sigma_eps": inst.sigma_eps, "entry_dist": inst.entry_dist,
        "trace_A": inst.trace_A, "tau_B": inst.tau_B,
        "A_model": inst.A_spec.name if inst.A_spec is not None else None,
        "B_model": inst.B_spec.name if inst.B_spec is not None else None,
        "beta_magnitudes": BETA_MAGNITUDES,
    }
    meta.update(extra_meta or {})
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return meta


def load_instance(directory):
    """Read an instance directory; latent parts (``X0``, ``W``, ``eps``) are absent."""
    with open(os.path.join(directory, "meta.json")) as fh:
        meta = json.load(fh)
    X = np.loadtxt(os.path.join(directory, "X.csv"), delimiter=",", ndmin=2)
    y = np.loadtxt(os.path.join(directory, "y.csv"), delimiter=",", ndmin=1)
    beta = np.loadtxt(os.path.join(directory, "beta_star.csv"), delimiter=",", ndmin=1)
    if X.shape != (meta["n"], meta["m"]) or y.shape != (meta["n"],):
        raise ValueError(f"{directory}: stored arrays disagree with meta.json dims")
    inst = ProblemInstance(
        X=X, y=y, beta_star=beta, seed=meta["seed"], d=meta["d"],
        sigma_eps=meta["sigma_eps"], entry_dist=meta.get("entry_dist", "gaussian"),
        trace_A=meta.get("trace_A"),
    )
    return inst, meta

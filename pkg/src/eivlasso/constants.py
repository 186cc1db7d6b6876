"""Calibration constants: rates, regularity constants, penalties, contraction.

All functions are pure.  The unspecified absolute constants ``C`` and ``C0``
default to 1, and ``K = M_eps = 1`` corresponds to standard Gaussian design
entries and N(0, 1) noise.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from eivlasso.covariance import CovarianceSpec, sparse_eigenvalue

EIG_ZERO_RTOL = 1e-10


class InfeasibleContraction(ValueError):
    """The contraction coefficient is not below one (``z >= 1`` or ``kappa >= 1``)."""

    def __init__(self, message, z=None, kappa=None):
        super().__init__(message)
        self.z = z
        self.kappa = kappa


@dataclass(frozen=True)
class RateScalars:
    m: float
    n: int
    K: float
    C0: float
    M_eps: float
    rho_n: float
    r_mm: float

    @property
    def log_ratio(self):
        """``sqrt(log m / n)``."""
        return math.sqrt(math.log(self.m) / self.n)


def compute_rates(m, n, K=1.0, C0=1.0, M_eps=1.0):
    """``rho_n = C0 K sqrt(log m / n)`` and ``r_mm = 2 C0 K^2 sqrt(log m / (m n))``."""
    if m < 2:
        raise ValueError(f"need m >= 2 so that log m > 0, got m={m}")
    if n < 1:
        raise ValueError(f"need n >= 1, got n={n}")
    for name, v in (("K", K), ("C0", C0), ("M_eps", M_eps)):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive and finite")
    lm = math.log(m)
    return RateScalars(
        m=m, n=n, K=K, C0=C0, M_eps=M_eps,
        rho_n=C0 * K * math.sqrt(lm / n),
        r_mm=2.0 * C0 * K**2 * math.sqrt(lm / (m * n)),
    )


@dataclass(frozen=True)
class RegularityConstants:
    m: int
    n: int
    lambda_min_A: float
    lambda_max_A: float
    a_max: float
    b_max: float
    tau_B: float
    s0: int
    M_A: float
    M_plus: float
    vp_s0: float
    vp_s0_plus1: float
    alpha: float
    tau_tol: float
    D0: float
    D0_prime: float
    D1: float
    D2: float
    D_ora: float
    tau_B_plus_half: float
    C: float
    B_op_norm: float
    effective_rank_B: float
    rho_max_exact: bool

    @property
    def smoothness(self):
        """Upper-RE smoothness ``(11/8) lambda_max(A)``."""
        return 11.0 / 8.0 * self.lambda_max_A


def _s0_bound(lambda_min_A, C, n, m):
    return lambda_min_A / (32.0 * C) * math.sqrt(n / math.log(m))


def s0_condition_holds(s, vp_s, lambda_min_A, C, n, m):
    """``sqrt(s) * vp(s) <= lambda_min(A) / (32 C) * sqrt(n / log m)``."""
    return math.sqrt(s) * vp_s <= _s0_bound(lambda_min_A, C, n, m)


def rho_max_path(A, s_max, budget=20000, seed=0):
    """``rho_max(s, A)`` for ``s = 1..s_max`` as a nondecreasing array.

    Heuristic (lower-bound) values are made monotone by a running maximum,
    which keeps them valid lower bounds.  Returns ``(values, all_exact)``.
    """
    vals = np.empty(s_max)
    exact = True
    for s in range(1, s_max + 1):
        v, ex = sparse_eigenvalue(A, s, "max", budget=budget, seed=seed)
        vals[s - 1] = v
        exact &= ex
    return np.maximum.accumulate(vals), exact


def compute_regularity(A, B, n, C=1.0, budget=20000, seed=0):
    """Regularity constants for column covariance ``A`` and row covariance ``B``.

    ``s0`` is the largest ``s`` in ``[1, m]`` with
    ``sqrt(s) (rho_max(s, A) + tau_B) <= lambda_min(A)/(32 C) sqrt(n/log m)``,
    found by a forward scan with early exit; it is clamped to 1 when even
    ``s = 1`` fails (the usual case with ``C = 1`` at moderate ``n``).
    """
    if not isinstance(A, CovarianceSpec) or not isinstance(B, CovarianceSpec):
        raise TypeError("A and B must be CovarianceSpec instances")
    m = A.dim
    if m < 2:
        raise ValueError("need m >= 2")
    if B.dim != n:
        raise ValueError(f"B has dim {B.dim} but n={n}")
    lam_max = A.lambda_max
    lam_min = A.lambda_min
    if lam_min <= EIG_ZERO_RTOL * lam_max:
        raise ValueError(
            f"lambda_min(A)={lam_min:.3e} is numerically zero; Lower-RE would be vacuous"
        )
    tau_B = B.trace / n
    bound = _s0_bound(lam_min, C, n, m)

    # vp(s) is nondecreasing, so feasible s form a prefix: scan until failure.
    vps = []
    exact = True
    running = -np.inf
    s0 = 0
    for s in range(1, m + 1):
        v, ex = sparse_eigenvalue(A, s, "max", budget=budget, seed=seed)
        running = max(running, v)
        exact &= ex
        vps.append(running + tau_B)
        if math.sqrt(s) * vps[-1] <= bound:
            s0 = s
        else:
            break
    s0 = max(s0, 1)
    if len(vps) < s0 + 1 and s0 < m:
        v, ex = sparse_eigenvalue(A, s0 + 1, "max", budget=budget, seed=seed)
        vps.append(max(running, v) + tau_B)
        exact &= ex
    vp_s0 = vps[s0 - 1]
    vp_s0_plus1 = vps[s0] if s0 < m else lam_max + tau_B

    a_max = A.max_diag
    B_op = B.op_norm
    alpha = 5.0 / 8.0 * lam_min
    D_ora = 2.0 * (math.sqrt(A.op_norm) + math.sqrt(B_op))
    return RegularityConstants(
        m=m, n=n,
        lambda_min_A=lam_min, lambda_max_A=lam_max,
        a_max=a_max, b_max=B.max_diag if B.dim else 0.0,
        tau_B=tau_B, s0=s0,
        M_A=64.0 * C * vp_s0 / lam_min,
        M_plus=32.0 * C * vp_s0_plus1 / lam_min,
        vp_s0=vp_s0, vp_s0_plus1=vp_s0_plus1,
        alpha=alpha,
        tau_tol=(lam_min - alpha) / s0,
        D0=math.sqrt(tau_B) + math.sqrt(a_max),
        D0_prime=math.sqrt(B_op) + math.sqrt(a_max),
        D1=A.fro_norm / math.sqrt(m) + B.fro_norm / math.sqrt(n),
        D2=2.0 * (A.op_norm + B_op),
        D_ora=D_ora,
        tau_B_plus_half=math.sqrt(tau_B) + D_ora / math.sqrt(m),
        C=C,
        B_op_norm=B_op,
        effective_rank_B=(B.trace / B_op) if B_op > 0 else 0.0,
        rho_max_exact=bool(exact),
    )


@dataclass(frozen=True)
class PenaltyPlan:
    variant: str
    psi_basic: float
    psi_oracle: float
    lambda_lasso: float
    mu_basic: float
    omega: float
    mu_oracle: float
    tilde_tau_B_half: float
    C6: float
    beta_norm_bound: float

    @property
    def psi(self):
        return self.psi_basic if self.variant == "basic" else self.psi_oracle

    @property
    def mu(self):
        return self.mu_basic if self.variant == "basic" else self.mu_oracle


def psi_basic(D2, K, beta_norm, M_eps, C0=1.0):
    """``C0 D2 K (K ||beta*|| + M_eps)``."""
    return C0 * D2 * K * (K * beta_norm + M_eps)


def psi_oracle(D0_prime, tau_B_plus_half, K, beta_norm, M_eps, C0=1.0):
    """``C0 D0' K (M_eps + tau_B^{+/2} K ||beta*||)``."""
    return C0 * D0_prime * K * (M_eps + tau_B_plus_half * K * beta_norm)


def tilde_tau_B_half(tau_hat_B, C6, r_mm):
    """``sqrt(tau_hat_B) + C6 sqrt(r_mm)``."""
    return math.sqrt(max(tau_hat_B, 0.0)) + C6 * math.sqrt(r_mm)


def compute_penalty_plan(reg, rates, beta_norm, tau_hat_B, C6=None, variant="oracle"):
    """Penalty levels for the corrected Lasso and the conic estimator.

    ``lambda_lasso = 4 psi sqrt(log m / n)`` with ``psi`` the basic or the
    oracle (measurement-error aware) level.  ``mu``/``omega`` follow the basic
    choice ``mu = 2 D2 K rho_n``, ``omega = D0 M_eps rho_n`` or the oracle
    choice ``mu = D0' tilde_tau_B^{1/2} K rho_n``.  ``C6`` defaults to
    ``D_ora``.
    """
    if variant not in ("basic", "oracle"):
        raise ValueError("variant must be 'basic' or 'oracle'")
    values = (beta_norm, tau_hat_B) + ((C6,) if C6 is not None else ())
    if not all(math.isfinite(v) for v in values):
        raise ValueError("penalty inputs must be finite")
    if C6 is None:
        C6 = reg.D_ora
    elif C6 < reg.D_ora:
        warnings.warn(f"C6={C6:.4g} is below D_ora={reg.D_ora:.4g}", stacklevel=2)
    K, M_eps, C0 = rates.K, rates.M_eps, rates.C0
    pb = psi_basic(reg.D2, K, beta_norm, M_eps, C0)
    po = psi_oracle(reg.D0_prime, reg.tau_B_plus_half, K, beta_norm, M_eps, C0)
    tt = tilde_tau_B_half(tau_hat_B, C6, rates.r_mm)
    psi = pb if variant == "basic" else po
    return PenaltyPlan(
        variant=variant,
        psi_basic=pb,
        psi_oracle=po,
        lambda_lasso=4.0 * psi * rates.log_ratio,
        mu_basic=2.0 * reg.D2 * K * rates.rho_n,
        omega=reg.D0 * M_eps * rates.rho_n,
        mu_oracle=reg.D0_prime * tt * K * rates.rho_n,
        tilde_tau_B_half=tt,
        C6=C6,
        beta_norm_bound=beta_norm,
    )


@dataclass(frozen=True)
class ContractionPlan:
    alpha_l: float
    alpha_u: float
    tau_l: float
    tau_u: float
    zeta: float
    nu: float
    alpha_l_bar: float
    z: float
    kappa: float
    xi: float
    d: int
    R: float
    delta_sq: float = 0.0

    def lambda_lower_bound(self, grad_inf_norm):
        """``max(12 ||grad L(beta*)||_inf, 16 R xi / (1 - kappa))``."""
        return max(12.0 * grad_inf_norm, 16.0 * self.R * self.xi / (1.0 - self.kappa))


def contraction(alpha_l, alpha_u, tau_l, tau_u, d, zeta, R, delta_sq=0.0):
    """Contraction coefficient and tolerance for composite gradient descent.

    Raises :class:`InfeasibleContraction` when the effective curvature is not
    positive, ``z >= 1`` or ``kappa >= 1``.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if zeta <= 0 or zeta < alpha_u:
        raise ValueError(f"step parameter zeta={zeta} must be >= alpha_u={alpha_u}")
    if min(tau_l, tau_u) < 0 or alpha_l <= 0:
        raise ValueError("need alpha_l > 0 and nonnegative tolerances")
    nu = 64.0 * d * tau_u
    alpha_bar = alpha_l - 64.0 * d * tau_l
    if alpha_bar <= 0:
        raise InfeasibleContraction(
            f"effective curvature alpha_l - 64 d tau_l = {alpha_bar:.4g} <= 0"
        )
    z = 128.0 * d * tau_u / alpha_bar
    if z >= 1:
        raise InfeasibleContraction(f"z = 128 d tau_u / alpha_bar = {z:.4g} >= 1", z=z)
    q = alpha_bar / (4.0 * zeta)
    kappa = (1.0 - q + z) / (1.0 - z)
    if kappa >= 1:
        raise InfeasibleContraction(f"kappa = {kappa:.4g} >= 1", z=z, kappa=kappa)
    xi = 2.0 * max(tau_l, tau_u) * (q + 2.0 * z + 5.0) / (1.0 - z)
    return ContractionPlan(
        alpha_l=alpha_l, alpha_u=alpha_u, tau_l=tau_l, tau_u=tau_u, zeta=zeta,
        nu=nu, alpha_l_bar=alpha_bar, z=z, kappa=kappa, xi=xi, d=d, R=R,
        delta_sq=delta_sq,
    )


def compute_contraction(reg, d, zeta, R, tau=None):
    """Contraction plan with ``alpha_l = (5/8) lambda_min(A)``,
    ``alpha_u = (11/8) lambda_max(A)`` and ``tau_l = tau_u = tau`` (defaults
    to the Lower-RE tolerance ``reg.tau_tol``)."""
    t = reg.tau_tol if tau is None else tau
    return contraction(reg.alpha, reg.smoothness, t, t, d, zeta, R)


def iterations_to_tolerance(plan, phi_gap_0, lam, delta_sq):
    """Ceiling of the iteration count after which the excess objective is
    below ``delta_sq``, floored at 1."""
    kappa, R = plan.kappa, plan.R
    if not 0 < kappa < 1:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    if delta_sq <= 0 or phi_gap_0 <= 0:
        raise ValueError("phi_gap_0 and delta_sq must be positive")
    ratio = lam * R / delta_sq
    if ratio <= 1:
        raise ValueError("need lambda R / delta^2 > 1")
    inv = math.log(1.0 / kappa)
    T = 2.0 * math.log(phi_gap_0 / delta_sq) / inv
    T += math.log(math.log(ratio)) * (1.0 + math.log(2.0) / inv)
    # absorb float noise so exact integers are not bumped up
    return max(1, math.ceil(T - 1e-9))

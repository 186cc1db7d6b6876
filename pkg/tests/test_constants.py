import math

import numpy as np
import pytest

from eivlasso import covariance as cov
from eivlasso import constants as C
from eivlasso.covariance import sparse_eigenvalue


def test_rates_examples():
    assert C.compute_rates(math.e**2, 4).rho_n == pytest.approx(math.sqrt(0.5))
    assert C.compute_rates(math.e**2, 2).rho_n == pytest.approx(1.0)
    # 2 sqrt(log 1024) / 1024 = 0.0051422...
    assert C.compute_rates(1024, 1024).r_mm == pytest.approx(0.0051422, rel=1e-4)


def test_rates_reject_small_m():
    with pytest.raises(ValueError):
        C.compute_rates(1, 10)


def test_rates_monotone():
    r = [C.compute_rates(64, n) for n in (10, 20, 40)]
    assert r[0].rho_n > r[1].rho_n > r[2].rho_n
    assert r[0].r_mm > r[1].r_mm > r[2].r_mm
    s = [C.compute_rates(m, 50) for m in (3, 30, 300)]
    assert s[0].rho_n < s[1].rho_n < s[2].rho_n


def test_identity_design_s0():
    m, n = 40, 200
    reg = C.compute_regularity(cov.identity(m), cov.zeros(n), n, C=1 / 32)
    assert reg.s0 == min(m, math.floor(n / math.log(m)))
    assert reg.alpha == pytest.approx(5 / 8)
    assert reg.tau_tol == pytest.approx((3 / 8) / reg.s0)


def test_identity_design_s0_clamped_at_m():
    reg = C.compute_regularity(cov.identity(5), cov.zeros(400), 400, C=1 / 32)
    assert reg.s0 == 5


def test_s0_matches_exhaustive_scan():
    m, n = 256, 1200
    A = cov.ar1(m, 0.3)
    B = cov.scale_to_trace(cov.ar1(n, 0.3), n, 0.3)
    Cc = 0.02  # small enough that s0 > 1 and the scan is informative
    reg = C.compute_regularity(A, B, n, C=Cc)
    bound = A.lambda_min / (32 * Cc) * math.sqrt(n / math.log(m))
    feasible = []
    for s in range(1, 40):
        vp = sparse_eigenvalue(A, s, "max")[0] + 0.3
        feasible.append(math.sqrt(s) * vp <= bound)
    last = max(i + 1 for i, ok in enumerate(feasible) if ok)
    assert all(feasible[:last]) and not any(feasible[last:])
    assert reg.s0 == last
    assert reg.M_A == pytest.approx(64 * Cc * reg.vp_s0 / A.lambda_min)


def test_regularity_invariants():
    A = cov.ar1(50, 0.3)
    B = cov.scale_to_trace(cov.ar1(80, 0.5), 80, 0.4)
    reg = C.compute_regularity(A, B, 80)
    assert reg.s0 == 1  # the bound fails at s = 1 with C = 1 and is clamped
    assert reg.alpha == pytest.approx(5 / 8 * A.lambda_min)
    assert reg.tau_tol == pytest.approx(3 / 8 * A.lambda_min / reg.s0)
    assert reg.D0 <= reg.D0_prime
    assert reg.tau_B == pytest.approx(0.4)
    assert reg.D_ora == pytest.approx(2 * (math.sqrt(A.op_norm) + math.sqrt(B.op_norm)))


def test_regularity_rejects_singular_A():
    with pytest.raises(ValueError):
        C.compute_regularity(cov.zeros(4), cov.zeros(10), 10)


def _reg(**kw):
    reg = C.compute_regularity(cov.identity(10), cov.zeros(20), 20)
    from dataclasses import replace
    return replace(reg, **kw)


def test_penalty_examples():
    rates = C.compute_rates(100, 50, M_eps=1e-300)
    plan = C.compute_penalty_plan(_reg(), rates, beta_norm=0.0, tau_hat_B=0.0, variant="basic")
    assert plan.psi_basic == pytest.approx(0.0, abs=1e-290)
    assert plan.lambda_lasso == pytest.approx(0.0, abs=1e-290)
    assert C.psi_basic(D2=1, K=1, beta_norm=0, M_eps=1, C0=1) == 1
    assert C.tilde_tau_B_half(0.0, 2.0, 0.01) == pytest.approx(0.2)


def test_penalty_lambda_uses_factor_four():
    rates = C.compute_rates(100, 50)
    reg = _reg()
    plan = C.compute_penalty_plan(reg, rates, 5.0, 0.3)
    assert plan.lambda_lasso == pytest.approx(4 * plan.psi_oracle * math.sqrt(math.log(100) / 50))
    assert plan.mu_basic == pytest.approx(2 * reg.D2 * rates.rho_n)
    assert plan.omega == pytest.approx(reg.D0 * rates.rho_n)


def test_penalty_warns_on_small_C6():
    with pytest.warns(UserWarning):
        C.compute_penalty_plan(_reg(), C.compute_rates(100, 50), 1.0, 0.3, C6=1e-3)


def test_oracle_psi_below_basic_on_normalized_pairs():
    for rho_a, rho_b, tau in ((0.3, 0.3, 0.3), (0.5, 0.1, 0.7), (0.0, 0.6, 0.1)):
        A = cov.ar1(64, rho_a)
        B = cov.scale_to_trace(cov.ar1(100, rho_b), 100, tau)
        reg = C.compute_regularity(A, B, 100)
        if reg.tau_B_plus_half <= 1 and reg.D0_prime <= reg.D2:
            assert C.psi_oracle(reg.D0_prime, reg.tau_B_plus_half, 1, 5, 1) <= C.psi_basic(reg.D2, 1, 5, 1)


def test_contraction_examples():
    p = C.contraction(1.0, 1.0, 0.0, 0.0, d=3, zeta=1.0, R=1.0)
    assert (p.nu, p.z, p.kappa) == (0.0, 0.0, 0.75)
    assert C.contraction(1.0, 1.0, 0.0, 0.0, 3, 4.0, 1.0).kappa == pytest.approx(0.9375)
    with pytest.raises(C.InfeasibleContraction):
        C.contraction(1.0, 1.0, 0.0, 1.0, d=3, zeta=1.0, R=1.0)


def test_kappa_shrinks_as_zeta_drops_toward_alpha_u():
    zetas = np.linspace(1.0, 5.0, 9)
    plans = [C.contraction(1.0, 1.0, 1e-5, 1e-5, 2, z, 1.0) for z in zetas]
    kappas = [p.kappa for p in plans]
    assert np.all(np.diff(kappas) > 0)
    assert all(p.xi > 10 * 1e-5 for p in plans)


def test_iterations_to_tolerance_examples():
    plan = C.contraction(1.0, 1.0, 0.0, 0.0, 1, 1.0, R=1.0)
    plan_half = type(plan)(**{**plan.__dict__, "kappa": 0.5})
    assert C.iterations_to_tolerance(plan_half, 4.0, math.e**math.e, 1.0) == 6
    assert C.iterations_to_tolerance(plan_half, 1.0, math.e, 1.0) == 1
    plan_e = type(plan)(**{**plan.__dict__, "kappa": 1 / math.e})
    lam = 50.0
    expected = math.ceil(math.log(math.log(lam)) * (1 + math.log(2)))
    assert C.iterations_to_tolerance(plan_e, 1.0, lam, 1.0) == expected
    bad = type(plan)(**{**plan.__dict__, "kappa": 1.0})
    with pytest.raises(ValueError):
        C.iterations_to_tolerance(bad, 1.0, 10.0, 1.0)

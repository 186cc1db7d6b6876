import numpy as np
import pytest

from eivlasso import covariance as cov
from eivlasso.conic import (
    ConicConfig, InfeasibleProblem, NotConverged, check_cone_constraint, project_inf_cone,
    project_soc, solve_conic,
)
from eivlasso.simulate import gen_beta, gen_instance
from eivlasso.surrogate import SurrogatePair, surrogate_from_instance
from oracles import conic_grid


def _pair(G, g):
    G = np.atleast_2d(np.asarray(G, float))
    return SurrogatePair(G, np.atleast_1d(np.asarray(g, float)), 0.0, 1, G.shape[0])


def test_zero_cross_moment():
    sol = solve_conic(_pair(np.eye(3), np.zeros(3)), ConicConfig(mu=0.5, omega=0.0))
    np.testing.assert_array_equal(sol.beta_hat, 0.0)
    assert sol.t_hat == 0.0 and sol.objective == 0.0 and sol.converged


def test_one_dim_example_against_grid():
    sol = solve_conic(_pair(1.0, 1.0), ConicConfig(mu=0.5, omega=0.1))
    assert sol.converged
    assert abs(sol.objective - conic_grid(1.0, 1.0, 0.5, 0.1)) <= 5e-3


def test_random_one_dim_problems_against_grid():
    rng = np.random.default_rng(11)
    for _ in range(20):
        G, g = rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)
        mu, omega = rng.uniform(0.1, 1.0), rng.uniform(0.0, 0.3)
        sol = solve_conic(_pair(G, g), ConicConfig(mu=mu, omega=omega))
        assert sol.feas_residual <= 1e-6
        assert abs(sol.objective - conic_grid(G, g, mu, omega)) <= 5e-3


def test_objective_monotone_in_omega_and_mu():
    rng = np.random.default_rng(2)
    for _ in range(10):
        G, g = rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)
        base = solve_conic(_pair(G, g), ConicConfig(mu=0.4, omega=0.05)).objective
        assert solve_conic(_pair(G, g), ConicConfig(mu=0.4, omega=0.2)).objective <= base + 1e-5
        assert solve_conic(_pair(G, g), ConicConfig(mu=0.8, omega=0.05)).objective <= base + 1e-5


def test_check_cone_constraint_examples():
    p = _pair(np.eye(2), np.zeros(2))
    assert check_cone_constraint(p, np.zeros(2), 0.0, 1.0, 0.0) == 0.0
    q = _pair(np.eye(2), np.array([1.0, -0.5]))
    assert check_cone_constraint(q, np.zeros(2), 0.0, 1.0, 0.0) == 1.0
    assert check_cone_constraint(q, np.array([1.0, -0.5]), 2.0, 1.0, 0.0) == 0.0


def test_projections_are_projections(rng):
    for _ in range(50):
        v, s = rng.standard_normal(5), rng.standard_normal()
        pv, ps = project_soc(v, s)
        assert np.linalg.norm(pv) <= ps + 1e-12
        # a projection satisfies <x - p, q - p> <= 0 for feasible q
        for _ in range(5):
            qv = rng.standard_normal(5)
            qs = np.linalg.norm(qv) + abs(rng.standard_normal())
            assert (v - pv) @ (qv - pv) + (s - ps) * (qs - ps) <= 1e-10
        mu, omega = rng.uniform(0.1, 2), rng.uniform(0, 1)
        r, t = project_inf_cone(v, s, mu, omega)
        assert np.max(np.abs(r)) <= mu * t + omega + 1e-12
        for _ in range(5):
            qs = abs(rng.standard_normal()) * 2
            qr = rng.uniform(-1, 1, 5) * (mu * qs + omega)
            assert (v - r) @ (qr - r) + (s - t) * (qs - t) <= 1e-10


def test_infeasible_without_slack():
    # mu = 0 and a singular Gamma_hat: the residual cannot fall below |g_2|
    p = _pair(np.diag([1.0, 0.0]), np.array([0.5, 1.0]))
    with pytest.raises(InfeasibleProblem):
        solve_conic(p, ConicConfig(mu=0.0, omega=0.1, max_iters=5000))


def test_strict_raises_on_iteration_cap():
    A = cov.ar1(30, 0.3)
    inst = gen_instance(A, cov.scale_to_trace(cov.ar1(60, 0.3), 60, 0.3), gen_beta(30, 4, 5.0, 0), seed=0)
    pair = surrogate_from_instance(inst, trace_A=A.trace)
    with pytest.raises(NotConverged) as info:
        solve_conic(pair, ConicConfig(mu=0.05, omega=0.02, max_iters=10), strict=True)
    assert info.value.solution is not None


def _calibrated(seed, m=64, n=400):
    A = cov.ar1(m, 0.3)
    B = cov.scale_to_trace(cov.ar1(n, 0.3), n, 0.3)
    inst = gen_instance(A, B, gen_beta(m, 5, 5.0, 1), seed=seed)
    pair = surrogate_from_instance(inst, trace_A=A.trace)
    lr = np.sqrt(np.log(m) / n)
    D0p = np.sqrt(B.op_norm) + 1.0
    D_ora = 2 * (np.sqrt(A.op_norm) + np.sqrt(B.op_norm))
    r_mm = 2 * np.sqrt(np.log(m) / (m * n))
    mu = D0p * (np.sqrt(pair.tau_hat_B) + D_ora * np.sqrt(r_mm)) * lr
    omega = (np.sqrt(0.3) + 1.0) * lr
    return inst, pair, mu, omega


def test_truth_is_feasible_under_calibrated_penalties():
    hits = 0
    for s in range(40):
        inst, pair, mu, omega = _calibrated(s)
        b = inst.beta_star
        hits += check_cone_constraint(pair, b, np.linalg.norm(b), mu, omega) == 0.0
    assert hits >= 0.95 * 40


def test_matches_cvxpy_and_cone_property():
    cp = pytest.importorskip("cvxpy")
    for s in range(3):
        inst, pair, mu, omega = _calibrated(100 + s, m=32, n=300)
        sol = solve_conic(pair, ConicConfig(mu=mu, omega=omega, max_iters=50000, tol_feas=1e-8,
                                            tol_gap=1e-8))
        b, t = cp.Variable(pair.m), cp.Variable()
        prob = cp.Problem(cp.Minimize(cp.norm1(b) + t),
                          [cp.norm_inf(pair.gamma_hat - pair.Gamma_hat @ b) <= mu * t + omega,
                           cp.norm2(b) <= t])
        prob.solve(solver=cp.CLARABEL)
        assert sol.objective == pytest.approx(prob.value, rel=1e-3)
        v = sol.beta_hat - inst.beta_star
        S = inst.beta_star != 0
        if check_cone_constraint(pair, inst.beta_star, np.linalg.norm(inst.beta_star), mu, omega) == 0:
            assert np.abs(v[~S]).sum() <= 2 * np.abs(v[S]).sum() + 1e-6 * np.abs(v).sum()

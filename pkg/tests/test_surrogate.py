import numpy as np
import pytest

from eivlasso import covariance as cov
from eivlasso.simulate import gen_beta, gen_instance
from eivlasso.surrogate import (
    SurrogatePair, build_surrogate, estimate_tau_B, loss_and_gradient, oracle_residual,
    surrogate_from_instance,
)


def _pair(G, g):
    G = np.asarray(G, float)
    return SurrogatePair(G, np.asarray(g, float), 0.0, 1, G.shape[0])


def test_tau_estimate_examples():
    assert estimate_tau_B(np.eye(2), 2.0) == 0.0
    assert estimate_tau_B(np.ones((2, 2)), 1.0) == pytest.approx(0.5)
    X = np.full((3, 4), 0.5)  # ||X||_F^2 = 3 = n tr(A) with tr(A) = 1
    assert estimate_tau_B(X, 1.0) == 0.0


def test_build_surrogate_example():
    p = build_surrogate(np.eye(2), np.array([1.0, 0.0]), 0.0)
    np.testing.assert_allclose(p.Gamma_hat, 0.5 * np.eye(2))
    np.testing.assert_allclose(p.gamma_hat, [0.5, 0.0])


def test_surrogate_can_be_indefinite(rng):
    X = rng.standard_normal((5, 8))
    p = build_surrogate(X, rng.standard_normal(5), 10.0)
    assert np.linalg.eigvalsh(p.Gamma_hat)[0] < 0
    np.testing.assert_array_equal(p.Gamma_hat, p.Gamma_hat.T)


def test_build_rejects_mismatch():
    with pytest.raises(ValueError):
        build_surrogate(np.zeros((3, 2)), np.zeros(4), 0.0)


def test_noiseless_surrogate_is_plain_gram():
    A, B = cov.ar1(6, 0.3), cov.zeros(20)
    inst = gen_instance(A, B, gen_beta(6, 2, 5.0, 0), seed=1)
    p = surrogate_from_instance(inst, known_tau_B=0.0)
    np.testing.assert_allclose(p.Gamma_hat, inst.X0.T @ inst.X0 / 20, atol=1e-14)


def test_loss_examples():
    value, grad = loss_and_gradient(_pair(np.eye(3), [1, 2, 3]), np.zeros(3))
    assert value == 0.0
    np.testing.assert_array_equal(grad, [-1, -2, -3])
    value, grad = loss_and_gradient(_pair(np.eye(2), [0, 0]), np.array([1.0, 0.0]))
    assert value == 0.5
    np.testing.assert_array_equal(grad, [1, 0])
    with pytest.raises(ValueError):
        loss_and_gradient(_pair(np.eye(2), [0, 0]), np.zeros(3))


def test_gradient_central_differences(rng):
    M = rng.standard_normal((10, 10))
    p = _pair(M + M.T, rng.standard_normal(10))
    beta = rng.standard_normal(10)
    _, grad = loss_and_gradient(p, beta)
    h = 1e-5
    for j in range(10):
        e = np.zeros(10)
        e[j] = h
        fd = (loss_and_gradient(p, beta + e)[0] - loss_and_gradient(p, beta - e)[0]) / (2 * h)
        assert abs(fd - grad[j]) <= 1e-6


def test_oracle_residual_examples(rng):
    assert oracle_residual(_pair(np.eye(2), [1, 0]), np.zeros(2)) == 1.0
    M = rng.standard_normal((4, 4))
    G = M @ M.T + np.eye(4)
    b = rng.standard_normal(4)
    assert oracle_residual(_pair(G, G @ b), b) == pytest.approx(0.0, abs=1e-12)

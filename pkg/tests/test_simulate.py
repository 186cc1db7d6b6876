import json

import numpy as np
import pytest

from eivlasso import covariance as cov
from eivlasso.simulate import gen_beta, gen_instance, load_instance, save_instance


def test_gen_beta_single_entry():
    b = gen_beta(10, 1, 5.0, seed=3)
    assert np.count_nonzero(b) == 1
    assert abs(b[b != 0][0]) == pytest.approx(5.0)


@pytest.mark.parametrize("m,d,seed", [(5, 5, 0), (100, 7, 11), (1024, 32, 123)])
def test_gen_beta_norm_and_support(m, d, seed):
    b = gen_beta(m, d, 5.0, seed)
    assert np.count_nonzero(b) == d
    assert np.linalg.norm(b) == pytest.approx(5.0, abs=1e-12)
    np.testing.assert_array_equal(b, gen_beta(m, d, 5.0, seed))


def test_gen_beta_rejects_bad_sparsity():
    with pytest.raises(ValueError):
        gen_beta(4, 5)


def test_identity_reduction():
    m, n = 6, 9
    beta = np.zeros(m)
    beta[0] = 1.0
    inst = gen_instance(cov.identity(m), cov.zeros(n), beta, sigma_eps=0.0, seed=5)
    np.testing.assert_array_equal(inst.W, 0.0)
    np.testing.assert_allclose(inst.y, inst.X[:, 0])
    np.testing.assert_array_equal(inst.X, inst.X0)


def test_instance_invariants_and_determinism():
    A, B = cov.ar1(12, 0.3), cov.scale_to_trace(cov.ar1(20, 0.3), 20, 0.3)
    beta = gen_beta(12, 3, 5.0, 1)
    a = gen_instance(A, B, beta, seed=42)
    b = gen_instance(A, B, beta, seed=42)
    np.testing.assert_array_equal(a.X, a.X0 + a.W)
    np.testing.assert_array_equal(a.y, a.X0 @ beta + a.eps)
    np.testing.assert_array_equal(a.X, b.X)
    assert a.d == 3
    assert not np.array_equal(a.X, gen_instance(A, B, beta, seed=43).X)


def test_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        gen_instance(cov.identity(4), cov.identity(5), np.zeros(3))


def test_rademacher_entries():
    m, n = 5, 8
    inst = gen_instance(cov.identity(m), cov.identity(n), np.ones(m), entry_dist="rademacher", seed=2)
    assert set(np.unique(inst.X0)) <= {-1.0, 1.0}
    assert set(np.unique(inst.W)) <= {-1.0, 1.0}


def test_gram_expectation_monte_carlo():
    # E[X^T X] = n A + tr(B) I
    m, n, reps = 8, 50, 2000
    A = cov.ar1(m, 0.4)
    B = cov.scale_to_trace(cov.ar1(n, 0.5), n, 0.3)
    beta = np.zeros(m)
    grams = np.stack([
        (lambda X: X.T @ X / n)(gen_instance(A, B, beta, 0.0, seed=s).X) for s in range(reps)
    ])
    mean = grams.mean(axis=0)
    se = grams.std(axis=0, ddof=1) / np.sqrt(reps)
    target = A.matrix + 0.3 * np.eye(m)
    assert np.all(np.abs(mean - target) <= 3 * se)


def test_error_columns_share_row_covariance():
    m, n, reps = 4, 6, 3000
    B = cov.scale_to_trace(cov.ar1(n, 0.6), n, 1.0)
    cols = np.stack([gen_instance(cov.identity(m), B, np.zeros(m), 0.0, seed=s).W[:, 2]
                     for s in range(reps)])
    np.testing.assert_allclose(np.cov(cols.T), B.matrix, atol=0.12)


def test_save_load_round_trip(tmp_path):
    A, B = cov.ar1(7, 0.3), cov.scale_to_trace(cov.ar1(11, 0.3), 11, 0.3)
    inst = gen_instance(A, B, gen_beta(7, 2, 5.0, 0), seed=9)
    save_instance(inst, tmp_path, extra_meta={"note": "x"})
    loaded, meta = load_instance(tmp_path)
    np.testing.assert_array_equal(loaded.X, inst.X)
    np.testing.assert_array_equal(loaded.y, inst.y)
    np.testing.assert_array_equal(loaded.beta_star, inst.beta_star)
    assert meta["seed"] == 9 and meta["note"] == "x"
    assert meta["tau_B"] == pytest.approx(0.3)
    assert json.loads((tmp_path / "meta.json").read_text())["m"] == 7

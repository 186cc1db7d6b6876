import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eivlasso import covariance as cov


def test_ar1_small():
    expected = np.array([[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
    np.testing.assert_allclose(cov.ar1(3, 0.5).matrix, expected)
    np.testing.assert_array_equal(cov.ar1(5, 0.0).matrix, np.eye(5))


def test_ar1_rejects_unit_correlation():
    with pytest.raises(ValueError):
        cov.ar1(4, 1.0)


def test_ar1_smallest_eigenvalue_ratio():
    # (1 - r)/(1 + r) is the limiting smallest eigenvalue: 0.538 vs 0.176
    r = cov.ar1(256, 0.3).lambda_min / cov.ar1(256, 0.7).lambda_min
    assert r == pytest.approx(3.0, rel=0.03)


def test_star_block_two_by_two():
    np.testing.assert_allclose(cov.star_block(2, 0.4, 2).matrix, [[1, 0.4], [0.4, 1]])


def test_star_block_topology():
    S = cov.star_block(1024, 0.3, 17, 32)
    M = S.matrix
    block = M[:17, :17]
    assert np.all(block[0, 1:] == 0.3)
    assert np.allclose(block[1:, 1:][~np.eye(16, dtype=bool)], 0.09)
    # no coupling between blocks or into the singleton tail
    assert M[0, 17] == 0
    np.testing.assert_array_equal(M[544:, 544:], np.eye(1024 - 544))
    assert S.lambda_min > 0


def test_star_block_rejects_single_node_block():
    with pytest.raises(ValueError):
        cov.star_block(10, 0.3, 1)


def test_random_precision_properties():
    B1 = cov.random_precision(30, seed=4)
    B2 = cov.random_precision(30, seed=4)
    np.testing.assert_array_equal(B1.matrix, B2.matrix)
    assert B1.lambda_min > 0
    np.testing.assert_allclose(cov.random_precision(1, c_diag=2.0).matrix, [[0.5]])


def test_random_precision_three_by_three_stays_pd():
    B = cov.random_precision(3, c_diag=1.0, seed=1)
    # precision = I + Laplacian, so its eigenvalues are >= c_diag
    assert np.linalg.eigvalsh(np.linalg.inv(B.matrix)).min() >= 1.0 - 1e-12


def test_scale_to_trace(rng):
    np.testing.assert_allclose(cov.scale_to_trace(cov.identity(7), 7, 0.3).matrix, 0.3 * np.eye(7))
    G = rng.standard_normal((9, 9))
    B = cov.CovarianceSpec(G @ G.T + np.eye(9))
    Bs = cov.scale_to_trace(B, 9, 0.7)
    assert Bs.trace / 9 == pytest.approx(0.7, abs=1e-12)
    np.testing.assert_allclose(Bs.matrix / Bs.matrix[0, 0], B.matrix / B.matrix[0, 0])
    with pytest.raises(ValueError):
        cov.scale_to_trace(cov.zeros(3), 3, 0.3)


def test_sqrt_examples():
    np.testing.assert_allclose(cov.identity(4).sqrt(), np.eye(4))
    np.testing.assert_allclose(cov.CovarianceSpec(np.diag([4.0, 9.0])).sqrt(), np.diag([2.0, 3.0]))
    A = cov.ar1(3, 0.5)
    R = A.sqrt()
    assert np.linalg.norm(R @ R - A.matrix) <= 1e-8 * np.linalg.norm(A.matrix)
    np.testing.assert_allclose(cov.sqrt(A.scaled(4.0)), 2.0 * R, atol=1e-12)


def test_sqrt_rejects_indefinite():
    with pytest.raises(ValueError):
        cov.CovarianceSpec(np.diag([1.0, -0.5])).sqrt()


def test_rejects_asymmetric():
    with pytest.raises(ValueError):
        cov.CovarianceSpec(np.array([[1.0, 0.2], [0.0, 1.0]]))


def test_sparse_eigenvalue_brute_force():
    A = cov.ar1(6, 0.5)
    top = max(np.linalg.eigvalsh(A.matrix[np.ix_(J, J)])[-1]
              for J in itertools.combinations(range(6), 2))
    value, exact = cov.sparse_eigenvalue(A, 2, "max")
    assert exact
    assert value == pytest.approx(top, abs=1e-12)


def test_sparse_eigenvalue_edges():
    A = cov.ar1(8, 0.4)
    assert cov.sparse_eigenvalue(A, 1, "max")[0] == pytest.approx(1.0)
    assert cov.sparse_eigenvalue(A, 8, "max")[0] == pytest.approx(A.lambda_max)
    assert cov.sparse_eigenvalue(A, 8, "min")[0] == pytest.approx(A.lambda_min)


def test_sparse_eigenvalue_sandwich_and_monotone():
    A = cov.ar1(40, 0.3)
    vals = [cov.sparse_eigenvalue(A, d, "max", budget=2000)[0] for d in range(1, 8)]
    assert np.all(np.diff(vals) >= -1e-12)
    assert A.max_diag <= vals[0] + 1e-12 and vals[-1] <= A.lambda_max + 1e-12


def test_sparse_eigenvalue_heuristic_is_a_lower_bound():
    A = cov.ar1(30, 0.6)
    value, exact = cov.sparse_eigenvalue(A, 5, "max", budget=100)
    assert not exact
    assert value <= cov.sparse_eigenvalue(A, 5, "max", budget=10**6)[0] + 1e-12


def test_csv_round_trip(tmp_path):
    A = cov.star_block(9, 0.3, 3)
    path = tmp_path / "a.csv"
    cov.save_csv(A, path)
    assert path.read_text().startswith("# dim=9")
    np.testing.assert_array_equal(cov.load_csv(path).matrix, A.matrix)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.floats(-0.9, 0.9))
def test_ar1_sqrt_reconstructs(dim, rho):
    A = cov.ar1(dim, rho)
    R = A.sqrt()
    assert np.linalg.norm(R @ R - A.matrix) <= 1e-8 * np.linalg.norm(A.matrix)


def test_scaling_reuses_cached_spectrum():
    A = cov.ar1(30, 0.4)
    A.sqrt()
    S = A.scaled(2.5)
    fresh = cov.CovarianceSpec(2.5 * A.matrix)
    np.testing.assert_allclose(S.eigenvalues, fresh.eigenvalues, rtol=1e-12)
    np.testing.assert_allclose(S.sqrt(), fresh.sqrt(), atol=1e-12)

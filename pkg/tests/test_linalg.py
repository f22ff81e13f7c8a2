import dataclasses

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from policypath.errors import InvalidMatrix, InvalidRank, OracleTooLarge
from policypath.linalg import (
    gram_singular_oracle,
    reconstruct,
    relative_error,
    temporal_svd,
)


def check_factorization(a, svd, orth_tol=1e-8, recon_tol=1e-10):
    d = min(a.shape)
    assert svd.u.shape == (a.shape[0], d)
    assert svd.vt.shape == (d, a.shape[1])
    assert np.all(np.diff(svd.sigma) <= 0)
    assert np.all(svd.sigma >= 0)
    assert np.abs(svd.u.T @ svd.u - np.eye(d)).max() <= orth_tol
    assert np.abs(svd.vt @ svd.vt.T - np.eye(d)).max() <= orth_tol
    assert relative_error(reconstruct(svd, d), a) <= recon_tol


def test_diagonal():
    svd = temporal_svd([[3.0, 0.0], [0.0, 2.0]])
    np.testing.assert_array_equal(svd.sigma, [3.0, 2.0])
    np.testing.assert_allclose(svd.u, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(svd.vt, np.eye(2), atol=1e-15)


def test_rank_one_spectrum():
    # A^T A = [[5, 10], [10, 20]] has eigenvalues 25 and 0
    svd = temporal_svd([[1.0, 2.0], [2.0, 4.0]])
    np.testing.assert_allclose(svd.sigma, [5.0, 0.0], atol=1e-12)
    check_factorization(np.array([[1.0, 2.0], [2.0, 4.0]]), svd)


def test_orthogonal_matrix_has_unit_spectrum():
    svd = temporal_svd([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(svd.sigma, [1.0, 1.0], atol=1e-15)


def test_sign_convention():
    rng = np.random.default_rng(3)
    svd = temporal_svd(rng.standard_normal((5, 17)))
    lead = svd.vt[np.arange(svd.d), np.argmax(np.abs(svd.vt), axis=1)]
    assert np.all(lead >= 0)


@pytest.mark.parametrize("shape", [(1, 1), (1, 9), (9, 1), (4, 4), (12, 5), (6, 300)])
def test_shapes(shape):
    a = np.random.default_rng(sum(shape)).standard_normal(shape)
    check_factorization(a, temporal_svd(a))


def test_zero_matrix_is_canonical():
    svd = temporal_svd(np.zeros((3, 5)))
    np.testing.assert_array_equal(svd.sigma, np.zeros(3))
    np.testing.assert_array_equal(svd.u, np.eye(3))
    np.testing.assert_array_equal(svd.vt, np.eye(3, 5))


def test_rank_deficient_rows_still_orthonormal():
    rng = np.random.default_rng(11)
    base = rng.standard_normal((3, 40))
    a = np.vstack([base, base[0] + base[1], 2 * base[2], np.zeros(40)])
    svd = temporal_svd(a)
    check_factorization(a, svd)
    assert np.all(svd.sigma[3:] == 0)


def test_graded_path_matrix():
    rng = np.random.default_rng(5)
    a = np.cumsum(rng.standard_normal((60, 400)) * 0.01, axis=0) + rng.standard_normal(400)
    check_factorization(a, temporal_svd(a))


def test_deterministic_bitwise():
    a = np.random.default_rng(9).standard_normal((20, 70))
    s1, s2 = temporal_svd(a), temporal_svd(a)
    for f in ("u", "sigma", "vt"):
        assert getattr(s1, f).tobytes() == getattr(s2, f).tobytes()


def test_rejects_non_finite():
    with pytest.raises(InvalidMatrix):
        temporal_svd([[1.0, np.nan]])
    with pytest.raises(InvalidMatrix):
        temporal_svd([[np.inf]])


def test_outputs_are_read_only():
    svd = temporal_svd(np.eye(3))
    with pytest.raises(ValueError):
        svd.u[0, 0] = 5.0


def test_reconstruct_examples():
    svd = temporal_svd([[1.0, 2.0], [2.0, 4.0]])
    np.testing.assert_allclose(reconstruct(svd, 1), [[1.0, 2.0], [2.0, 4.0]], rtol=0, atol=1e-10 * 5)
    svd = temporal_svd([[3.0, 0.0], [0.0, 2.0]])
    np.testing.assert_allclose(reconstruct(svd, 1), [[3.0, 0.0], [0.0, 0.0]], atol=1e-15)


@pytest.mark.parametrize("keep", [0, 3, -1])
def test_reconstruct_rank_bounds(keep):
    svd = temporal_svd(np.eye(2))
    with pytest.raises(InvalidRank):
        reconstruct(svd, keep)


def test_reconstruct_error_non_increasing():
    a = np.random.default_rng(2).standard_normal((10, 30))
    svd = temporal_svd(a)
    errors = [relative_error(reconstruct(svd, k), a) for k in range(1, svd.d + 1)]
    assert all(e2 <= e1 + 1e-14 for e1, e2 in zip(errors, errors[1:]))
    assert errors[-1] <= 1e-10


def test_oracle_examples():
    np.testing.assert_array_equal(gram_singular_oracle([[3.0, 0.0], [0.0, 2.0]]), [3.0, 2.0])
    np.testing.assert_array_equal(gram_singular_oracle([[1.0, 2.0], [2.0, 4.0]]), [5.0, 0.0])
    np.testing.assert_array_equal(gram_singular_oracle([[-7.0]]), [7.0])


def test_oracle_size_limit():
    with pytest.raises(OracleTooLarge):
        gram_singular_oracle(np.ones((65, 64)))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(-10, 10, allow_nan=False, width=64)))
@example(np.array([[6.96212598e-160, 6.96212598e-160], [1.0, 6.96212598e-160]]))  # subnormal squares
def test_matches_oracle_on_small_matrices(a):
    svd = temporal_svd(a)
    # the oracle squares A, so compare squared values against ||A||^2
    scale = max(float(np.sum(a * a)), 1.0)
    np.testing.assert_allclose(svd.sigma ** 2, gram_singular_oracle(a) ** 2, rtol=0, atol=1e-12 * scale)
    check_factorization(a, svd, recon_tol=1e-10 if np.any(a) else 0.0)


def test_source_is_kept_for_exact_full_rank():
    a = np.random.default_rng(0).standard_normal((4, 6))
    svd = temporal_svd(a)
    np.testing.assert_array_equal(svd.source, a)
    assert dataclasses.replace(svd, source=None).source is None

import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nsaflow.errors import DegenerateInputError, DimensionError
from nsaflow.linalg import (
    finite_diff_grad,
    frobenius_norm,
    inv_sqrt_psd,
    polar_orthonormal,
    qr_orthonormalize,
    sym_eig,
)
from nsaflow.objective import fidelity_loss, grad_orth_raw, orth_penalty_raw

# polar factor of [[1,2],[3,4],[5,6]], frozen from scipy.linalg.polar
POLAR_123456 = np.array([
    [-0.5510032429894985, 0.7278246763805066],
    [0.13615851867190826, 0.5610652289408111],
    [0.8233202803333143, 0.3943057815011161],
])
# [[4,1],[1,3]]^(-1/2), frozen from scipy.linalg.fractional_matrix_power
INVSQRT_41_13 = np.array([
    [0.5158091539374333, -0.08165898261441804],
    [-0.08165898261441802, 0.5974681365518514],
])

tall_shapes = st.sampled_from([(3, 2), (5, 3), (8, 3), (10, 4), (6, 6)])


def _matrix(shape, seed):
    return np.random.default_rng(seed).standard_normal(shape)


class TestNorm:
    def test_identity(self):
        assert frobenius_norm(np.eye(3)) == pytest.approx(np.sqrt(3))

    def test_zero(self):
        assert frobenius_norm(np.zeros((2, 5))) == 0.0

    def test_triple(self):
        assert frobenius_norm([[3, 4]]) == 5.0


class TestSymEig:
    def test_identity(self):
        lam, _ = sym_eig(np.eye(4))
        np.testing.assert_allclose(lam, np.ones(4))

    def test_ascending(self):
        lam, _ = sym_eig(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(lam, [1.0, 2.0])

    def test_reconstruction(self, rng):
        A = rng.standard_normal((6, 6))
        S = A + A.T
        lam, V = sym_eig(S)
        rel = np.linalg.norm(V @ np.diag(lam) @ V.T - S) / np.linalg.norm(S)
        assert rel < 1e-8
        np.testing.assert_allclose(V.T @ V, np.eye(6), atol=1e-8)

    def test_nonsquare(self):
        with pytest.raises(DimensionError):
            sym_eig(np.ones((2, 3)))

    def test_absorbs_asymmetry(self):
        S = np.array([[2.0, 1.0 + 1e-12], [1.0, 2.0]])
        lam, _ = sym_eig(S)
        np.testing.assert_allclose(lam, [1.0, 3.0], atol=1e-10)


class TestInvSqrt:
    def test_identity(self):
        np.testing.assert_allclose(inv_sqrt_psd(np.eye(3)), np.eye(3))

    def test_diag(self):
        np.testing.assert_allclose(inv_sqrt_psd(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)

    def test_frozen_oracle(self):
        np.testing.assert_allclose(inv_sqrt_psd([[4.0, 1.0], [1.0, 3.0]]), INVSQRT_41_13, atol=1e-14)

    def test_rank_deficient_is_finite(self):
        a = np.arange(1.0, 6.0)
        Y = np.column_stack([a, a])
        S = Y.T @ Y
        R = inv_sqrt_psd(S)
        assert np.all(np.isfinite(R))
        lam, V = np.linalg.eigh(S)
        clip = 1e-8 * max(lam[-1], 1.0)
        expected = V @ np.diag(1.0 / np.maximum(lam, clip)) @ V.T
        np.testing.assert_allclose(R @ R, expected, rtol=1e-6)

    @given(tall_shapes, st.integers(0, 10_000))
    def test_symmetric_psd(self, shape, seed):
        Y = _matrix(shape, seed)
        R = inv_sqrt_psd(Y.T @ Y)
        np.testing.assert_allclose(R, R.T, atol=1e-10)
        assert np.linalg.eigvalsh(R).min() >= -1e-10

    def test_inverse_on_well_conditioned(self, rng):
        A = rng.standard_normal((10, 4))
        S = A.T @ A
        R = inv_sqrt_psd(S)
        np.testing.assert_allclose(R @ R @ S, np.eye(4), atol=1e-10)


class TestPolar:
    def test_orthonormal_fixed_point(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((7, 3)))
        np.testing.assert_allclose(polar_orthonormal(Q), Q, atol=1e-10)

    def test_scaled_identity(self):
        np.testing.assert_allclose(polar_orthonormal(2 * np.eye(3)), np.eye(3), atol=1e-14)

    def test_frozen_oracle(self):
        Y = np.arange(1.0, 7.0).reshape(3, 2)
        np.testing.assert_allclose(polar_orthonormal(Y), POLAR_123456, atol=1e-12)

    def test_matches_svd_oracle(self, rng):
        Y = rng.standard_normal((8, 3))
        U, _, Vt = np.linalg.svd(Y, full_matrices=False)
        np.testing.assert_allclose(polar_orthonormal(Y), U @ Vt, atol=1e-8)

    def test_wide_rows_orthonormal(self, rng):
        Y = rng.standard_normal((3, 7))
        Q = polar_orthonormal(Y)
        np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-8)
        np.testing.assert_allclose(Q, sl.polar(Y)[0], atol=1e-8)

    def test_zero_raises(self):
        with pytest.raises(DegenerateInputError):
            polar_orthonormal(np.zeros((4, 2)))

    def test_rank_deficient_tall(self):
        a = np.arange(1.0, 6.0)
        Q = polar_orthonormal(np.column_stack([a, a]))
        np.testing.assert_allclose(Q.T @ Q, np.eye(2), atol=1e-8)

    @given(tall_shapes, st.integers(0, 10_000), st.floats(1e-3, 1e3))
    def test_scale_free(self, shape, seed, c):
        Y = _matrix(shape, seed)
        np.testing.assert_allclose(polar_orthonormal(c * Y), polar_orthonormal(Y), atol=1e-10)

    @given(tall_shapes, st.integers(0, 10_000))
    def test_idempotent(self, shape, seed):
        Q = polar_orthonormal(_matrix(shape, seed))
        np.testing.assert_allclose(polar_orthonormal(Q), Q, atol=1e-10)


class TestQR:
    def test_orthonormal_input(self):
        Q0 = np.eye(4)[:, :2]
        np.testing.assert_allclose(qr_orthonormalize(Q0), Q0, atol=1e-14)

    def test_sign_convention_flips(self):
        Q0 = -np.eye(3)[:, :2]
        np.testing.assert_allclose(qr_orthonormalize(Q0), -Q0, atol=1e-14)

    def test_hand_gram_schmidt(self):
        Q = qr_orthonormalize([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(Q[:, 0], [1, 0, 0], atol=1e-14)
        np.testing.assert_allclose(Q[:, 1], [0, 1, 0], atol=1e-14)

    def test_span(self, rng):
        Y = rng.standard_normal((10, 4))
        Q = qr_orthonormalize(Y)
        np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-8)
        np.testing.assert_allclose(Q @ Q.T @ Y, Y, atol=1e-8)

    def test_rank_deficient_completed(self):
        a = np.arange(1.0, 6.0)
        Q = qr_orthonormalize(np.column_stack([a, 2 * a, np.ones(5)]))
        np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-8)

    def test_deterministic(self, rng):
        Y = rng.standard_normal((9, 3))
        assert qr_orthonormalize(Y).tobytes() == qr_orthonormalize(Y.copy()).tobytes()

    @given(arrays(np.float64, (6, 3), elements=st.floats(-10, 10)))
    def test_largest_entry_positive(self, Y):
        Q = qr_orthonormalize(Y)
        idx = np.argmax(np.abs(Q), axis=0)
        assert np.all(Q[idx, np.arange(3)] > 0)

    def test_wide_rejected(self):
        with pytest.raises(DimensionError):
            qr_orthonormalize(np.ones((2, 3)))


class TestFiniteDiff:
    def test_half_norm(self, rng):
        Y = rng.standard_normal((4, 3))
        np.testing.assert_allclose(finite_diff_grad(lambda M: 0.5 * np.sum(M * M), Y), Y, atol=1e-8)

    def test_fidelity(self, rng):
        Y, X0 = rng.standard_normal((2, 4, 3))
        np.testing.assert_allclose(finite_diff_grad(lambda M: fidelity_loss(M, X0), Y), Y - X0, atol=1e-8)

    def test_raw_penalty(self, rng):
        Y = rng.standard_normal((5, 3))
        fd = finite_diff_grad(orth_penalty_raw, Y, h=1e-5)
        an = grad_orth_raw(Y)
        assert np.linalg.norm(fd - an) / np.linalg.norm(an) < 1e-5

    def test_input_untouched(self, rng):
        Y = rng.standard_normal((3, 2))
        before = Y.copy()
        finite_diff_grad(lambda M: float(np.sum(M**3)), Y)
        assert np.array_equal(Y, before)

import numpy as np
from django.test import SimpleTestCase

from plgp.exceptions import DecompositionError, DimensionError, PLGPError
from plgp.kernel import (
    KernelParams,
    block_solve,
    build_corr,
    cholesky,
    corr,
    cross_corr,
    extend_inverse,
    from_values,
)


class KernelParamsTests(SimpleTestCase):
    def test_rejects_non_positive_values(self):
        with self.assertRaises(PLGPError):
            KernelParams(d=0.0, g=0.1)
        with self.assertRaises(PLGPError):
            KernelParams(d=1.0, g=0.0)
        with self.assertRaises(PLGPError):
            KernelParams(d=float('nan'), g=0.1)

    def test_as_tuple(self):
        self.assertEqual(KernelParams(d=0.5, g=0.01).as_tuple(), (0.5, 0.01))


class CorrelationTests(SimpleTestCase):
    def test_corr_of_distinct_points(self):
        params = KernelParams(d=1.0, g=1e-12)
        self.assertAlmostEqual(corr([0.0], [1.0], params), np.exp(-1.0), places=12)
        self.assertAlmostEqual(corr([0.0, 0.0], [1.0, 1.0], params), np.exp(-2.0), places=12)

    def test_corr_adds_nugget_on_equal_points(self):
        params = KernelParams(d=0.3, g=0.25)
        self.assertAlmostEqual(corr([0.4, 0.1], [0.4, 0.1], params), 1.25, places=12)

    def test_cross_corr_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            cross_corr(np.zeros((2, 1)), np.zeros((2, 2)), 1.0)

    def test_build_corr_diagonal_and_inverse(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(size=(20, 2))
        K = build_corr(X, KernelParams(d=0.3, g=0.01))
        np.testing.assert_allclose(np.diag(K.values), 1.01)
        self.assertLess(K.residual(), 1e-8)
        sign, logdet = np.linalg.slogdet(K.values)
        self.assertEqual(sign, 1.0)
        self.assertAlmostEqual(K.log_det, logdet, places=8)

    def test_build_corr_of_empty_design(self):
        K = build_corr(np.zeros((0, 3)), KernelParams(d=1.0, g=0.1))
        self.assertEqual(K.n, 0)
        self.assertEqual(K.log_det, 0.0)

    def test_coincident_rows_stay_positive_definite(self):
        X = np.array([[0.2], [0.2], [0.7]])
        K = build_corr(X, KernelParams(d=0.5, g=0.05))
        self.assertAlmostEqual(K.values[0, 1], 1.0)
        self.assertLess(K.residual(), 1e-8)


class PartitionedInverseTests(SimpleTestCase):
    def test_matches_dense_inverse(self):
        rng = np.random.default_rng(11)
        params = KernelParams(d=0.2, g=0.01)
        X = rng.uniform(size=(50, 2))
        K = build_corr(X[:1], params)
        for t in range(1, 50):
            k = cross_corr(X[:t], X[t:t + 1], params.d)[:, 0]
            K = extend_inverse(K, k, 1.0 + params.g)
            if t in (1, 5, 20, 49):
                dense = build_corr(X[:t + 1], params)
                scale = max(1.0, np.abs(dense.inverse).max())
                np.testing.assert_allclose(K.inverse, dense.inverse, rtol=0, atol=1e-8 * scale)
                np.testing.assert_allclose(K.values, dense.values, atol=1e-14)
                self.assertAlmostEqual(K.log_det, dense.log_det, places=7)

    def test_rejects_non_positive_conditional_variance(self):
        K = from_values(np.array([[1.0]]))
        with self.assertRaises(DecompositionError) as ctx:
            extend_inverse(K, np.array([1.0]), 1.0)
        self.assertLessEqual(ctx.exception.quantity, 0.0)

    def test_length_mismatch(self):
        K = from_values(np.eye(2))
        with self.assertRaises(DimensionError):
            extend_inverse(K, np.zeros(3), 1.0)


class FactorisationTests(SimpleTestCase):
    def test_cholesky_of_indefinite_matrix(self):
        with self.assertRaises(DecompositionError):
            cholesky(-np.eye(3))

    def test_block_solve_agrees_with_inverse(self):
        rng = np.random.default_rng(5)
        K = build_corr(rng.uniform(size=(8, 1)), KernelParams(d=0.5, g=0.1))
        B = rng.normal(size=(8, 3))
        np.testing.assert_allclose(block_solve(K, B), K.inverse @ B, atol=1e-9)

    def test_block_solve_recovers_right_hand_side(self):
        rng = np.random.default_rng(6)
        A = rng.normal(size=(4, 4))
        A = A @ A.T + 4.0 * np.eye(4)
        M = rng.normal(size=(4, 2))
        np.testing.assert_allclose(block_solve(A, A @ M), M, atol=1e-8)
        np.testing.assert_allclose(block_solve(np.eye(2), M[:2]), M[:2])
        with self.assertRaises(DimensionError):
            block_solve(A, M[:3])

import numpy as np
import pytest

from gtv.covariance import (
    AssumptionInputs,
    CovarianceEstimate,
    assumption_constants,
    check_accuracy,
    hard_threshold,
    l11_distance,
    sample_covariance,
    select_threshold_cv,
    sideinfo_covariance,
)
from gtv.synth import Scenario, make_covariance, sample_data, sample_sideinfo


class TestSampleCovariance:
    def test_identical_rows_give_rank_one(self):
        x = np.array([1.0, -2.0, 0.5])
        X = np.tile(x, (7, 1))
        S = sample_covariance(X)
        assert np.allclose(S.matrix, np.outer(x, x), atol=1e-12)

    def test_identity_design(self):
        p = 5
        S = sample_covariance(np.eye(p))
        assert np.allclose(S.matrix, np.eye(p) / p, atol=1e-14)

    def test_block_monte_carlo_seeded(self):
        sc = Scenario(family="block", p=4, K=2, r=0.8, n=1000, s=2, seed=11)
        Sigma = make_covariance(sc).matrix
        X, _ = sample_data(Sigma, np.zeros(4), 1000, 0.0, 11)
        d = l11_distance(sample_covariance(X).matrix, Sigma)
        assert d < 0.1
        assert d == pytest.approx(0.042055678435962474, abs=1e-12)

    def test_centering_flag(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((50, 3)) + 10.0
        S = sample_covariance(X, center=True).matrix
        Xc = X - X.mean(axis=0)
        assert np.allclose(S, Xc.T @ Xc / 50, atol=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            sample_covariance(np.array([[1.0, np.nan]]))
        with pytest.raises(ValueError):
            sample_covariance(np.zeros((0, 3)))


class TestHardThreshold:
    def test_zero_threshold_is_identity(self):
        S = sample_covariance(np.random.default_rng(1).standard_normal((20, 4)))
        T = hard_threshold(S, 0.0)
        assert np.array_equal(T.matrix, S.matrix)

    def test_threshold_above_max_zeroes_everything(self):
        S = CovarianceEstimate(np.array([[1.0, 0.3], [0.3, 1.0]]))
        T = hard_threshold(S, 1.5)
        assert np.array_equal(T.matrix, np.zeros((2, 2)))

    def test_direct_rule(self):
        S = CovarianceEstimate(np.array([[1.0, 0.3], [0.3, 1.0]]))
        T = hard_threshold(S, 0.5)
        assert np.array_equal(T.matrix, np.eye(2))
        assert T.source == "hard_thresholded"
        assert T.threshold == 0.5

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((6, 6))
        S = CovarianceEstimate((A + A.T) / 2)
        t = 0.4
        once = hard_threshold(S, t)
        twice = hard_threshold(once, t)
        assert np.array_equal(once.matrix, twice.matrix)

    def test_keeps_large_entries_exactly(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((8, 8))
        S = CovarianceEstimate((A + A.T) / 2)
        T = hard_threshold(S, 0.7)
        big = np.abs(S.matrix) >= 0.7
        assert np.array_equal(T.matrix[big], S.matrix[big])
        assert np.all(T.matrix[~big] == 0)

    def test_negative_threshold_rejected(self):
        S = CovarianceEstimate(np.eye(2))
        with pytest.raises(ValueError):
            hard_threshold(S, -0.1)


class TestSelectThresholdCv:
    def test_single_candidate(self):
        X = np.random.default_rng(0).standard_normal((20, 3))
        assert select_threshold_cv(X, [0.0]) == 0.0

    def test_identical_folds_diagonal_truth(self):
        # orthogonal columns -> the fold covariances are exactly diagonal,
        # so every t at or below the smallest diagonal magnitude has zero
        # loss and the largest such grid value wins
        rng = np.random.default_rng(5)
        q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
        X0 = q * np.sqrt(6 * np.array([2.0, 1.0, 0.5]))
        X = np.vstack([X0, X0])
        grid = [0.0, 0.1, 0.3, 0.45, 0.6, 0.9]
        t = select_threshold_cv(X, grid, fold_indices=[0] * 6 + [1] * 6)
        assert t == 0.45
        # oracle: exhaustive evaluation of the loss on the same split
        S = sample_covariance(X0).matrix
        losses = [np.sum((np.where(np.abs(S) >= g, S, 0) - S) ** 2) for g in grid]
        manual = max(g for g, l in zip(grid, losses) if l <= min(losses) + 1e-15)
        assert t == manual

    def test_block_monte_carlo_separates_scales(self):
        sc = Scenario(family="block", p=8, K=2, r=0.8, n=500, s=4, seed=21)
        Sigma = make_covariance(sc).matrix
        X, _ = sample_data(Sigma, np.zeros(8), 500, 0.0, 21)
        grid = np.geomspace(1e-3, 0.5, 20)
        t = select_threshold_cv(X, grid, seed=0)
        a_r = (2 / 8) * 0.8
        assert 0 < t < a_r

    def test_errors(self):
        X = np.random.default_rng(0).standard_normal((6, 2))
        with pytest.raises(ValueError):
            select_threshold_cv(X, [])
        with pytest.raises(ValueError):
            select_threshold_cv(X, [0.1], folds=10)

    def test_dense_rule_no_larger_than_min_rule(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((40, 6))
        grid = np.linspace(0, 1.0, 11)
        t_min = select_threshold_cv(X, grid, seed=1)
        t_dense = select_threshold_cv(X, grid, seed=1, rule="min_1se_dense")
        assert t_dense <= t_min


class TestSideinfoCovariance:
    def test_exact_linear_model(self):
        rng = np.random.default_rng(4)
        n, K, p = 40, 3, 5
        S = rng.integers(0, 2, size=(n, K)).astype(float)
        A = rng.standard_normal((K, p))
        X = S @ A
        est = sideinfo_covariance(S, X)
        Sc = S - S.mean(axis=0)
        expected = A.T @ (Sc.T @ Sc / n) @ A
        assert np.allclose(est.matrix, expected, atol=1e-8)
        assert est.source == "side_info"

    def test_constant_column_gives_zero_matrix(self):
        n, p = 20, 3
        S = np.ones((n, 1))
        X = np.random.default_rng(6).standard_normal((n, p))
        est = sideinfo_covariance(S, X)
        A_hat = np.linalg.lstsq(S, X, rcond=None)[0]
        assert np.allclose(est.matrix, np.zeros((p, p)), atol=1e-12)
        assert A_hat.shape == (1, p)

    def test_noisy_monte_carlo(self):
        rng = np.random.default_rng(7)
        n, K, p = 2000, 2, 3
        S = rng.integers(0, 2, size=(n, K)).astype(float)
        A = rng.standard_normal((K, p))
        X = S @ A + 0.1 * rng.standard_normal((n, p))
        est = sideinfo_covariance(S, X)
        Sc = S - S.mean(axis=0)
        target = A.T @ (Sc.T @ Sc / n) @ A
        assert np.max(np.abs(est.matrix - target)) < 0.05

    def test_collinear_columns_reported(self):
        rng = np.random.default_rng(8)
        base = rng.integers(0, 2, size=(30, 2)).astype(float)
        S = np.column_stack([base, base[:, 0]])  # column 2 duplicates column 0
        X = rng.standard_normal((30, 4))
        with pytest.raises(ValueError, match="collinear"):
            sideinfo_covariance(S, X)

    def test_output_is_psd(self):
        rng = np.random.default_rng(10)
        for trial in range(10):
            n, K, p = 50, 4, 6
            S = rng.integers(0, 2, size=(n, K)).astype(float)
            if np.linalg.matrix_rank(S) < K:
                continue
            X = rng.standard_normal((n, p))
            est = sideinfo_covariance(S, X)
            assert np.linalg.eigvalsh(est.matrix).min() >= -1e-10


class TestL11Distance:
    def test_equal_matrices(self):
        A = np.random.default_rng(0).standard_normal((4, 4))
        assert l11_distance(A, A) == 0.0

    def test_zero_vs_identity(self):
        assert l11_distance(np.zeros((3, 3)), np.eye(3)) == 1.0

    def test_hand_arithmetic(self):
        A = np.array([[1.0, 0.2], [0.2, 1.0]])
        B = np.array([[1.0, 0.0], [0.0, 0.5]])
        assert l11_distance(A, B) == pytest.approx(0.7)

    def test_mismatched_shapes(self):
        with pytest.raises(ValueError):
            l11_distance(np.zeros((2, 2)), np.zeros((3, 3)))

    def test_norm_distance_properties(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            A, B, C = rng.standard_normal((3, 5, 5))
            assert l11_distance(A, B) == pytest.approx(l11_distance(B, A))
            assert l11_distance(A, C) <= l11_distance(A, B) + l11_distance(B, C) + 1e-12
            assert l11_distance(A, B) > 0


class TestAssumptionChecks:
    def test_constants_positive_validation(self):
        with pytest.raises(ValueError):
            AssumptionInputs(c_u=0.0, c_l=1.0)

    def test_constants_from_matrix(self):
        Sigma = np.array([[1.0, 0.4, 0.0], [0.4, 1.0, 0.4], [0.0, 0.4, 1.0]])
        consts = assumption_constants(Sigma)
        assert consts.c_l == pytest.approx(1.4)
        assert consts.c_u == pytest.approx(np.linalg.eigvalsh(Sigma)[-1])

    def test_accuracy_check_block_sideinfo(self):
        # side-information rows at the protocol's m=1000 satisfy the
        # row-sum accuracy requirement for a moderate block design
        sc = Scenario(family="block", p=40, K=10, r=0.8, n=50, s=16, seed=3)
        Sigma = make_covariance(sc)
        X_ind = sample_sideinfo(Sigma, m=1000, seed=3)
        from gtv.harness import estimate_covariance_thresholded

        est = estimate_covariance_thresholded(X_ind, seed=3)
        consts = assumption_constants(Sigma.matrix)
        result = check_accuracy(est.matrix, Sigma.matrix, consts)
        assert result.satisfied
        assert result.bound == pytest.approx(consts.c_l / 4)


class TestCovarianceEstimateValidation:
    def test_rejects_asymmetric(self):
        M = np.array([[1.0, 0.1], [0.2, 1.0]])
        with pytest.raises(ValueError, match="asymmetric"):
            CovarianceEstimate(M)

    def test_rejects_inconsistent_threshold_metadata(self):
        M = np.array([[1.0, 0.1], [0.1, 1.0]])
        with pytest.raises(ValueError):
            CovarianceEstimate(M, source="hard_thresholded", threshold=0.5)

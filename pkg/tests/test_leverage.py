import numpy as np
import pytest

from irtcore.leverage import (
    ScoreKind,
    leverage_l1,
    leverage_l2,
    leverage_l2_sketched,
    lewis_weights_l1,
)


def _leverage_def3(X):
    """Definition-3 oracle: l_i = e_i^T X (X^T X)^-1 X^T e_i."""
    G = np.linalg.inv(X.T @ X)
    return np.einsum("ij,jk,ik->i", X, G, X)


def _l1_leverage_grid(X, points=1_000_000):
    """Dense grid over the half-circle; brute-force l1 leverage oracle."""
    t = np.arange(points) * (np.pi / points)
    best = np.zeros(X.shape[0])
    for start in range(0, points, 100_000):
        H = np.column_stack([np.cos(t[start : start + 100_000]),
                             np.sin(t[start : start + 100_000])])
        P = np.abs(X @ H.T)
        denom = P.sum(axis=0)
        np.maximum(best, (P / denom).max(axis=1), out=best)
    return best


class TestLeverageL2:
    def test_identity(self):
        np.testing.assert_allclose(leverage_l2(np.eye(2)).values, [1.0, 1.0])

    def test_sum_is_rank(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            X = rng.normal(size=(rng.integers(2, 200), 2))
            assert abs(leverage_l2(X).values.sum() - 2.0) < 1e-8

    def test_known_three_rows(self):
        X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(leverage_l2(X).values, [0.5, 0.5, 1.0], atol=1e-12)
        np.testing.assert_allclose(leverage_l2(X).values, _leverage_def3(X), atol=1e-12)

    def test_matches_definition_three(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            X = rng.normal(size=(50, 2))
            np.testing.assert_allclose(
                leverage_l2(X).values, _leverage_def3(X), atol=1e-8
            )

    def test_sign_flip_invariance(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 2))
        base = leverage_l2(X).values
        for _ in range(200):
            d = rng.choice([-1.0, 1.0], size=40)
            np.testing.assert_allclose(
                leverage_l2(d[:, None] * X).values, base, atol=1e-10
            )

    def test_rank_one_input(self):
        X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        scores = leverage_l2(X).values
        assert abs(scores.sum() - 1.0) < 1e-8
        assert np.all(scores <= 1.0)

    def test_zero_matrix(self):
        np.testing.assert_array_equal(leverage_l2(np.zeros((3, 2))).values, 0.0)

    def test_row_duplication_halves_scores(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            X = rng.normal(size=(25, 2))
            doubled = np.vstack([X, X])
            np.testing.assert_allclose(
                leverage_l2(doubled).values[:25],
                0.5 * leverage_l2(X).values,
                atol=1e-10,
            )


class TestLeverageL2Sketched:
    def test_large_sketch_close_to_exact(self):
        rng = np.random.default_rng(4)
        X = np.linalg.qr(rng.normal(size=(600, 2)))[0]
        exact = leverage_l2(X).values
        approx = leverage_l2_sketched(X, sketch_rows=512, seed=9).values
        assert np.max(np.abs(approx - exact) / exact) < 0.2

    def test_single_row(self):
        v = leverage_l2_sketched(np.array([[2.0, 1.0]]), sketch_rows=16, seed=0).values
        assert 0.5 <= v[0] <= 2.0

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(100, 2))
        a = leverage_l2_sketched(X, sketch_rows=64, seed=42).values
        b = leverage_l2_sketched(X, sketch_rows=64, seed=42).values
        np.testing.assert_array_equal(a, b)

    def test_constant_factor_band_mostly_holds(self):
        rng = np.random.default_rng(6)
        hits = 0
        trials = 100
        for _ in range(trials):
            X = rng.normal(size=(200, 2))
            exact = leverage_l2(X).values
            approx = leverage_l2_sketched(X, sketch_rows=64, seed=rng.integers(2**31)).values
            if np.all(approx >= exact / 1.5) and np.all(approx <= exact / 0.5):
                hits += 1
        assert hits >= 95

    def test_rejects_small_sketch(self):
        with pytest.raises(ValueError):
            leverage_l2_sketched(np.eye(2), sketch_rows=4)


class TestLeverageL1:
    def test_identity(self):
        np.testing.assert_allclose(leverage_l1(np.eye(2)).values, [1.0, 1.0])

    def test_duplicated_row(self):
        X = np.array([[1.0, 0.0], [1.0, 0.0]])
        np.testing.assert_allclose(leverage_l1(X).values, [0.5, 0.5], atol=1e-12)

    def test_matches_dense_grid(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(10, 2))
        exact = leverage_l1(X).values
        grid = _l1_leverage_grid(X)
        np.testing.assert_allclose(exact, grid, atol=1e-6)
        assert np.all(exact >= grid - 1e-12)  # grid is a lower bound

    def test_zero_row_scores_zero(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert leverage_l1(X).values[0] == 0.0

    def test_sign_flip_invariance(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(30, 2))
        base = leverage_l1(X).values
        for _ in range(50):
            d = rng.choice([-1.0, 1.0], size=30)
            np.testing.assert_allclose(leverage_l1(d[:, None] * X).values, base,
                                       atol=1e-10)


class TestLewisWeights:
    def test_identity_fixed_point(self):
        np.testing.assert_allclose(lewis_weights_l1(np.eye(2)).values, [1.0, 1.0],
                                   atol=1e-10)

    def test_mass_identity(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            X = rng.normal(size=(rng.integers(5, 120), 2))
            sv = lewis_weights_l1(X, tol=1e-12)
            assert sv.converged
            assert abs(sv.values.sum() - 2.0) < 1e-6

    def test_fixed_point_residual(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(60, 2))
        w = lewis_weights_l1(X, tol=1e-12).values
        M = (X.T / w) @ X
        Minv = np.linalg.inv(M)
        w_next = np.sqrt(np.einsum("ij,jk,ik->i", X, Minv, X))
        assert np.max(np.abs(w_next - w) / w) <= 1e-10

    def test_sign_flip_invariance(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(40, 2))
        base = lewis_weights_l1(X, tol=1e-12).values
        for _ in range(50):
            d = rng.choice([-1.0, 1.0], size=40)
            np.testing.assert_allclose(
                lewis_weights_l1(d[:, None] * X, tol=1e-12).values, base, atol=1e-8
            )

    def test_rank_deficient_rejected(self):
        with pytest.raises(ValueError):
            lewis_weights_l1(np.array([[1.0, 1.0], [2.0, 2.0]]))

    def test_kind_tag(self):
        assert lewis_weights_l1(np.eye(2)).kind is ScoreKind.LEWIS_L1

import numpy as np
import pytest

from gramqubo.surrogate import (
    class_gradient,
    class_residual,
    gram,
    mean_cross_entropy,
    one_hot,
    softmax_probs,
)


class TestGram:
    def test_identical_rows(self):
        g = gram(np.array([[1.0, 1.0], [1.0, 1.0]]), 0.0)
        np.testing.assert_allclose(g.G, [[1.0, 1.0], [1.0, 1.0]])

    def test_hand_outer_product_and_bias_unregularized(self):
        g = gram(np.array([[2.0, 1.0]]), 0.5)
        np.testing.assert_allclose(g.G, [[4.0, 2.0], [2.0, 1.0]])
        np.testing.assert_allclose(g.G_lambda, [[4.5, 2.0], [2.0, 1.0]])
        assert g.G_lambda[-1, -1] == g.G[-1, -1]

    def test_bias_corner_is_one(self):
        rng = np.random.default_rng(0)
        X = np.concatenate([rng.uniform(0, 2, (7, 4)), np.ones((7, 1))], axis=1)
        g = gram(X, 0.001)
        assert g.G[-1, -1] == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_and_psd(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n, d = rng.integers(2, 30), rng.integers(1, 8)
            X = np.concatenate([rng.uniform(0, 2, (n, d)), np.ones((n, 1))], axis=1)
            g = gram(X, 0.001)
            np.testing.assert_allclose(g.G, g.G.T, atol=1e-12)
            v = rng.normal(size=(100, d + 1))
            quad = np.einsum("ij,jk,ik->i", v, g.G, v)
            assert np.all(quad >= -1e-10 * (v**2).sum(axis=1))

    def test_recompute_bit_identical(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(0, 1, (13, 5))
        a, b = gram(X, 0.001), gram(X, 0.001)
        assert np.array_equal(a.G, b.G) and np.array_equal(a.G_lambda, b.G_lambda)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            gram(np.zeros((0, 3)), 0.0)


class TestSoftmax:
    def test_zero_weights_uniform(self):
        X = np.array([[1.0, 2.0, 1.0], [0.5, 0.1, 1.0]])
        Pi = softmax_probs(X, np.zeros((3, 4)))
        np.testing.assert_allclose(Pi, 0.25, atol=1e-15)

    def test_constant_logit_rows_are_uniform(self):
        for t in (-40.0, 0.0, 3.25, 1e4):
            Pi = softmax_probs(np.array([[t, t, t]]), np.eye(3))
            np.testing.assert_allclose(Pi, 1.0 / 3.0, atol=1e-12)

    def test_shift_invariance(self):
        # adding a constant to every logit of a row leaves the row unchanged
        rng = np.random.default_rng(3)
        X = rng.normal(size=(5, 4))
        W = rng.normal(size=(4, 3))
        Pi = softmax_probs(X, W)
        bias_shift = np.vstack([W[:-1], W[-1] + 9.75])  # same shift for every class
        np.testing.assert_allclose(Pi, softmax_probs(X, bias_shift), atol=1e-12)

    def test_closed_form_two_class(self):
        X = np.array([[1.0]])
        W = np.array([[np.log(3.0), 0.0]])
        Pi = softmax_probs(X, W)
        np.testing.assert_allclose(Pi, [[0.75, 0.25]], atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(4)
        Pi = softmax_probs(rng.normal(size=(50, 6)), rng.normal(size=(6, 10)) * 3)
        np.testing.assert_allclose(Pi.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(Pi > 0) and np.all(Pi < 1)
        # max-subtraction keeps rows normalized even for huge logits
        extreme = softmax_probs(rng.normal(size=(20, 4)) * 500, np.eye(4))
        np.testing.assert_allclose(extreme.sum(axis=1), 1.0, atol=1e-12)

    def test_nonfinite_logits_rejected(self):
        with pytest.raises(ValueError):
            softmax_probs(np.array([[np.inf]]), np.array([[1.0, 1.0]]))


class TestResidual:
    def test_perfect_prediction(self):
        Y = one_hot(np.array([0, 1]), 2)
        np.testing.assert_allclose(class_residual(Y.copy(), Y, 0), 0.0)

    def test_uniform_probabilities(self):
        Y = one_hot(np.array([2, 0, 2]), 4)
        Pi = np.full((3, 4), 0.25)
        r = class_residual(Pi, Y, 2)
        np.testing.assert_allclose(r, [0.75, -0.25, 0.75])

    def test_direct_subtraction(self):
        Y = one_hot(np.array([0]), 10)
        Pi = np.full((1, 10), (1 - 0.4) / 9)
        Pi[0, 0] = 0.4
        assert class_residual(Pi, Y, 0)[0] == pytest.approx(0.6)

    def test_class_out_of_range(self):
        with pytest.raises(ValueError):
            class_residual(np.ones((1, 2)) / 2, np.ones((1, 2)), 2)


class TestGradient:
    def test_zero_residual_zero_lambda(self):
        X = np.ones((4, 3))
        g = class_gradient(X, np.zeros(4), np.ones(2), 0.0)
        np.testing.assert_allclose(g, 0.0)

    def test_pure_regularization(self):
        X = np.ones((4, 3))
        w = np.array([2.0, -1.0])
        g = class_gradient(X, np.zeros(4), w, 0.001)
        np.testing.assert_allclose(g, [0.002, -0.001, 0.0], atol=1e-15)

    def test_matches_central_finite_differences(self):
        """Independent oracle: perturb one weight entry at a time and
        difference the regularized mean cross-entropy."""
        rng = np.random.default_rng(5)
        for _ in range(5):
            N, d, C = int(rng.integers(4, 20)), int(rng.integers(1, 6)), int(rng.integers(2, 4))
            X = np.concatenate([rng.uniform(0, 1.5, (N, d)), np.ones((N, 1))], axis=1)
            labels = rng.integers(0, C, size=N)
            Y = one_hot(labels, C)
            W = rng.normal(0, 0.5, size=(d + 1, C))
            lam = 0.001

            def loss(Wm):
                return mean_cross_entropy(softmax_probs(X, Wm), Y, Wm, lam)

            for c in range(C):
                r_c = class_residual(softmax_probs(X, W), Y, c)
                g = class_gradient(X, r_c, W[:-1, c], lam)
                h = 1e-5
                fd = np.empty(d + 1)
                for j in range(d + 1):
                    Wp, Wm = W.copy(), W.copy()
                    Wp[j, c] += h
                    Wm[j, c] -= h
                    fd[j] = (loss(Wp) - loss(Wm)) / (2 * h)
                denom = max(np.linalg.norm(fd), 1e-12)
                assert np.linalg.norm(g - fd) / denom <= 1e-5


class TestMeanCrossEntropy:
    def test_uniform_is_log_c(self):
        Y = one_hot(np.array([3, 1, 0]), 10)
        Pi = np.full((3, 10), 0.1)
        W = np.zeros((5, 10))
        assert mean_cross_entropy(Pi, Y, W, 0.0) == pytest.approx(np.log(10.0), abs=1e-12)

    def test_perfect_prediction_leaves_reg_term(self):
        Y = one_hot(np.array([0, 1]), 2)
        Pi = np.clip(Y, 1e-12, 1 - 1e-12)
        W = np.array([[2.0, 0.0], [0.0, 0.0], [5.0, 5.0]])  # last row is bias
        lam = 0.01
        expected_reg = 0.5 * lam * 4.0  # bias row excluded
        assert mean_cross_entropy(Pi, Y, W, lam) == pytest.approx(expected_reg, abs=1e-9)

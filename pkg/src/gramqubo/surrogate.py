"""Continuous-side mathematics for the quadratic head-update surrogate.

The local model for a weight update u of one class column is
q_lambda(u) = 1/2 u^T G_lambda u + g_c^T u, where G = X_aug^T X_aug / N is
the feature Gram matrix (a prediction-independent curvature proxy,
positive semidefinite by construction) and g_c is the exact cross-entropy
gradient for that column expressed through the softmax residual
r_c = y_c - pi_c.  Regularization applies to weights only, never the bias
row, both in G_lambda and in the reported loss.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Gram:
    """Feature Gram matrix with its weight-only regularized variant."""

    G: np.ndarray
    lam: float
    G_lambda: np.ndarray


@dataclass(frozen=True)
class HeadWeights:
    """Augmented head weights, column c = [w_c; b_c]."""

    W_aug: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.W_aug.shape[1]


def gram(X_aug, lam: float) -> Gram:
    """G = X_aug^T X_aug / N; G_lambda adds lam to all but the bias diagonal."""
    X = as_matrix(X_aug)
    n = X.shape[0]
    if n < 1:
        raise ValueError("need at least one sample")
    G = X.T @ X / n
    G_lambda = G.copy()
    G_lambda[np.diag_indices(G.shape[0] - 1)] += lam
    return Gram(G=G, lam=float(lam), G_lambda=G_lambda)


def softmax_probs(X_aug, W_aug: np.ndarray) -> np.ndarray:
    """Row-wise softmax of X_aug @ W_aug with max-subtraction for stability."""
    logits = as_matrix(X_aug) @ W_aug
    if not np.isfinite(logits).all():
        raise ValueError("non-finite logits")
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def class_residual(Pi: np.ndarray, Y_onehot: np.ndarray, c: int) -> np.ndarray:
    """Softmax residual r_c = y_c - pi_c for one class column."""
    if not 0 <= c < Pi.shape[1]:
        raise ValueError(f"class index {c} out of range for C={Pi.shape[1]}")
    return Y_onehot[:, c] - Pi[:, c]


def class_gradient(X_aug, r_c: np.ndarray, w_c: np.ndarray, lam: float) -> np.ndarray:
    """Regularized gradient g_c = -X_aug^T r_c / N + lam [w_c; 0].

    ``w_c`` is the weight part of the class column (bias excluded); the
    appended zero keeps the bias unregularized.
    """
    X = as_matrix(X_aug)
    g = -X.T @ r_c / X.shape[0]
    g[:-1] += lam * w_c
    return g


def mean_cross_entropy(
    Pi: np.ndarray, Y_onehot: np.ndarray, W_aug: np.ndarray, lam: float
) -> float:
    """Mean cross-entropy plus (lam/2) * sum of squared weights (biases excluded).

    The regularizer matches the gradient's convention of leaving the bias
    row out.  Probabilities are floored at 1e-300 so a fully confident
    wrong prediction yields a large finite loss instead of inf.
    """
    p_true = np.clip((Pi * Y_onehot).sum(axis=1), 1e-300, None)
    data_term = float(-np.log(p_true).mean())
    reg_term = 0.5 * lam * float((W_aug[:-1] ** 2).sum())
    return data_term + reg_term


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """One-hot encode integer labels into an N x C {0,1} float matrix."""
    labels = np.asarray(labels)
    Y = np.zeros((labels.shape[0], num_classes))
    Y[np.arange(labels.shape[0]), labels] = 1.0
    return Y


def as_matrix(X) -> np.ndarray:
    """Accept a FeatureMatrix or a plain N x (d+1) array."""
    return np.asarray(getattr(X, "values", X), dtype=np.float64)

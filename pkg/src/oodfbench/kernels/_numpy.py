"""Pure-numpy reference implementations of the hot numeric kernels.

Every function here has a jitted twin in `_numba`; the pair must stay
numerically interchangeable (same shapes, same math, float64 only).
"""

import numpy as np


def affine(X, W, b):
    """X @ W.T + b for a dense layer with weights (out, in)."""
    return X @ W.T + b


def affine_relu(X, W, b):
    """Affine layer followed by a rectifier; returns (pre, post)."""
    pre = X @ W.T + b
    return pre, np.maximum(pre, 0.0)


def relu(Z):
    return np.maximum(Z, 0.0)


def backprop_delta(delta, W, pre):
    """Propagate the error one layer down through W and the rectifier gate."""
    return (delta @ W) * (pre > 0.0)


def input_grad(delta, W):
    """Gradient with respect to the layer input (no activation gate)."""
    return delta @ W


def grad_weights(delta, X):
    """Weight and bias gradients of one dense layer from its input X."""
    return delta.T @ X, delta.sum(axis=0)


def project_rows(X, P):
    """Apply the projector on the input side: X @ P.T."""
    return X @ P.T


def sgd_update(W, G, lr):
    """In-place W -= lr * G."""
    W -= lr * G


def owm_rank1(P, x, alpha):
    """One recursive-least-squares step: P -= (P x)(P x)^T / (alpha + x^T P x).

    Mutates P in place and returns it.
    """
    k = P @ x
    P -= np.outer(k, k) / (alpha + x @ k)
    return P


def owm_absorb(P, X, alpha):
    """Fold every row of X into the projector via repeated rank-1 updates."""
    for i in range(X.shape[0]):
        owm_rank1(P, X[i], alpha)
    return P

"""Numba-jitted twins of the kernels in `_numpy`.

The matmuls go through numba's BLAS binding; the elementwise tails (bias add,
rectifier gates, rank-1 projector updates) are fused into the same kernel so
the hot training loop avoids extra temporaries.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def affine(X, W, b):
    out = np.dot(X, W.T)
    n, m = out.shape
    for i in range(n):
        for j in range(m):
            out[i, j] += b[j]
    return out


@njit(cache=True)
def affine_relu(X, W, b):
    pre = np.dot(X, W.T)
    n, m = pre.shape
    post = np.empty_like(pre)
    for i in range(n):
        for j in range(m):
            v = pre[i, j] + b[j]
            pre[i, j] = v
            post[i, j] = v if v > 0.0 else 0.0
    return pre, post


@njit(cache=True)
def relu(Z):
    return np.maximum(Z, 0.0)


@njit(cache=True)
def backprop_delta(delta, W, pre):
    out = np.dot(delta, W)
    n, m = out.shape
    for i in range(n):
        for j in range(m):
            if pre[i, j] <= 0.0:
                out[i, j] = 0.0
    return out


@njit(cache=True)
def input_grad(delta, W):
    return np.dot(delta, W)


@njit(cache=True)
def grad_weights(delta, X):
    dW = np.dot(delta.T, X)
    n, m = delta.shape
    db = np.zeros(m)
    for i in range(n):
        for j in range(m):
            db[j] += delta[i, j]
    return dW, db


@njit(cache=True)
def project_rows(X, P):
    return np.dot(X, P.T)


@njit(cache=True)
def sgd_update(W, G, lr):
    n, m = W.shape
    for i in range(n):
        for j in range(m):
            W[i, j] -= lr * G[i, j]


@njit(cache=True)
def owm_rank1(P, x, alpha):
    k = np.dot(P, x)
    c = 1.0 / (alpha + np.dot(x, k))
    d = P.shape[0]
    for a in range(d):
        ka = k[a] * c
        for b in range(d):
            P[a, b] -= ka * k[b]
    return P


@njit(cache=True)
def owm_absorb(P, X, alpha):
    for i in range(X.shape[0]):
        owm_rank1(P, X[i], alpha)
    return P

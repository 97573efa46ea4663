"""Dense-network numerics: forward/backward, losses, and parameter updates.

All math runs in float64. Hidden layers use the rectifier, the output layer is
linear. Gradients with respect to the input batch are available on demand for
adversarial perturbation.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class Mlp:
    """Fully connected network: weights[i] has shape (dims[i+1], dims[i])."""

    layer_dims: list
    weights: list
    biases: list

    @property
    def n_layers(self):
        return len(self.weights)

    def copy(self):
        return Mlp(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class ForwardTrace:
    """Per-layer intermediates of one forward pass over a batch."""

    x: np.ndarray          # input batch (B, dims[0])
    pre: list              # pre-activations per layer, pre[-1] are the logits
    post: list             # post-activations of hidden layers

    @property
    def logits(self):
        return self.pre[-1]


@dataclass
class Gradients:
    """Parameter gradients mirroring Mlp shapes, plus optional input gradient."""

    dweights: list
    dbiases: list
    dinput: np.ndarray = None

    def scaled_add(self, other, coeff=1.0):
        for dw, ow in zip(self.dweights, other.dweights):
            dw += coeff * ow
        for db, ob in zip(self.dbiases, other.dbiases):
            db += coeff * ob
        return self


def init_mlp(layer_dims, rng):
    """Seeded uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    if len(layer_dims) < 2 or any(d <= 0 for d in layer_dims):
        raise ValueError(f"need at least two positive layer dims, got {layer_dims}")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(list(layer_dims), weights, biases)


def forward(mlp, batch):
    """Run the network over a (B, dims[0]) batch, retaining intermediates."""
    batch = np.ascontiguousarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != mlp.layer_dims[0]:
        raise ValueError(f"batch shape {batch.shape} incompatible with input dim {mlp.layer_dims[0]}")
    pre, post = [], []
    h = batch
    for i in range(mlp.n_layers - 1):
        p, h = kernels.affine_relu(h, mlp.weights[i], mlp.biases[i])
        pre.append(p)
        post.append(h)
    pre.append(kernels.affine(h, mlp.weights[-1], mlp.biases[-1]))
    return ForwardTrace(batch, pre, post)


def backward(mlp, trace, dlogits, want_input_grad=False):
    """Exact reverse-mode gradients for the loss whose logit-gradient is dlogits."""
    if dlogits.shape != trace.logits.shape:
        raise ValueError(f"dlogits shape {dlogits.shape} != logits shape {trace.logits.shape}")
    n = mlp.n_layers
    dweights = [None] * n
    dbiases = [None] * n
    delta = np.ascontiguousarray(dlogits)
    for i in range(n - 1, -1, -1):
        layer_in = trace.x if i == 0 else trace.post[i - 1]
        dweights[i], dbiases[i] = kernels.grad_weights(delta, layer_in)
        if i > 0:
            delta = kernels.backprop_delta(delta, mlp.weights[i], trace.pre[i - 1])
    dinput = kernels.input_grad(delta, mlp.weights[0]) if want_input_grad else None
    return Gradients(dweights, dbiases, dinput)


def softmax_cross_entropy(logits, labels, class_mask=None):
    """Mean cross-entropy over the batch and its logit gradient.

    class_mask, when given, is a boolean vector over classes; masked-out
    classes are excluded from the softmax (their logit gradient is zero).
    Returns (loss, dlogits) with dlogits = (softmax - onehot) / batch.
    """
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"label out of range for {k} classes")
    z = np.array(logits, dtype=np.float64)
    if class_mask is not None:
        class_mask = np.asarray(class_mask, dtype=bool)
        if not class_mask[labels].all():
            raise ValueError("a label points at a masked-out class")
        z[:, ~class_mask] = -np.inf
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    denom = ez.sum(axis=1, keepdims=True)
    logp = (z - zmax) - np.log(denom)
    loss = -logp[np.arange(n), labels].mean()
    dlogits = ez / denom
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    if class_mask is not None:
        dlogits[:, ~class_mask] = 0.0
    return loss, dlogits


def aux_loss(kind, logits, targets, temperature=1.0):
    """Auxiliary replay losses: 'logit_mse' or 'distill'.

    logit_mse is the mean squared difference over all entries. distill is the
    KL divergence from the temperature-softened target distribution to the
    student distribution, averaged over the batch.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if logits.shape != targets.shape:
        raise ValueError(f"shape mismatch {logits.shape} vs {targets.shape}")
    if kind == "logit_mse":
        diff = logits - targets
        loss = np.mean(diff * diff)
        return loss, 2.0 * diff / diff.size
    if kind == "distill":
        if temperature <= 0:
            raise ValueError(f"temperature must be positive, got {temperature}")
        n = logits.shape[0]
        p = _softmax(targets / temperature)
        q_log = _log_softmax(logits / temperature)
        loss = np.sum(p * (np.log(np.maximum(p, 1e-300)) - q_log)) / n
        dlogits = (np.exp(q_log) - p) / (temperature * n)
        return loss, dlogits
    raise ValueError(f"unknown aux loss kind {kind!r}")


def _softmax(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(z):
    zc = z - z.max(axis=1, keepdims=True)
    return zc - np.log(np.exp(zc).sum(axis=1, keepdims=True))


def sgd_step(mlp, grads, lr, projectors=None):
    """In-place SGD update, optionally projected on the input side.

    A per-layer projector P may have shape (in, in) -- weights projected via
    G @ P.T, biases updated plainly -- or (in+1, in+1), in which case the bias
    is treated as a weight on a constant-1 input and constrained too.
    """
    if lr < 0:
        raise ValueError("negative learning rate")
    for i in range(mlp.n_layers):
        W, b = mlp.weights[i], mlp.biases[i]
        gw, gb = grads.dweights[i], grads.dbiases[i]
        if gw.shape != W.shape:
            raise ValueError(f"gradient shape {gw.shape} != weight shape {W.shape}")
        P = projectors[i] if projectors is not None else None
        if P is None:
            kernels.sgd_update(W, np.ascontiguousarray(gw), lr)
            b -= lr * gb
        elif P.shape[0] == W.shape[1]:
            kernels.sgd_update(W, kernels.project_rows(np.ascontiguousarray(gw), P), lr)
            b -= lr * gb
        elif P.shape[0] == W.shape[1] + 1:
            gaug = np.empty((W.shape[0], W.shape[1] + 1))
            gaug[:, :-1] = gw
            gaug[:, -1] = gb
            gaug = kernels.project_rows(gaug, P)
            kernels.sgd_update(W, np.ascontiguousarray(gaug[:, :-1]), lr)
            b -= lr * gaug[:, -1]
        else:
            raise ValueError(f"projector side {P.shape[0]} fits neither {W.shape[1]} nor {W.shape[1] + 1}")
    return mlp


def numeric_grad_oracle(loss_fn, mlp, h=1e-5):
    """Central-difference gradient of loss_fn(mlp) for every parameter.

    Test oracle only: O(#params) forward passes, independent of backward().
    """
    if h <= 0:
        raise ValueError("h must be positive")
    dweights, dbiases = [], []
    for arrs, grads in ((mlp.weights, dweights), (mlp.biases, dbiases)):
        for arr in arrs:
            g = np.zeros_like(arr)
            flat = arr.reshape(-1)
            gflat = g.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                up = loss_fn(mlp)
                flat[j] = orig - h
                down = loss_fn(mlp)
                flat[j] = orig
                gflat[j] = (up - down) / (2.0 * h)
            grads.append(g)
    return Gradients(dweights, dbiases)

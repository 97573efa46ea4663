"""Shared strategy interface and hyperparameters.

Every strategy owns its network and per-strategy state, learns one task at a
time through `train_task`, and classifies over all classes seen so far
without task IDs at test time.
"""

from dataclasses import dataclass, fields

import numpy as np

from .. import nncore
from ..data import normalize


@dataclass
class StrategyParams:
    """Config-exposed hyperparameters; defaults target the split-MNIST scale."""

    epochs: int = 5
    batch_size: int = 64
    lr: float = 0.05
    hidden_dims: tuple = None          # falls back to the strategy default
    n_tasks: int = 10                  # horizon used by schedules
    buffer_capacity: int = 500
    der_alpha: float = 0.5
    der_beta: float = 0.5
    distill_temperature: float = 2.0
    distill_weight: float = 1.0
    owm_lr: float = 0.1
    owm_alpha0: float = 1e-3
    owm_alpha_decay: float = 1e-3
    owm_proj_batch: int = 64
    gdumb_epochs: int = 50
    expert_hidden: int = 100
    expert_epochs: int = 2
    expert_lr: float = 0.1

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise KeyError(f"unknown strategy parameter(s): {sorted(unknown)}")
        return cls(**d)


class ContinualStrategy:
    """Base class: one dense network, masked class-incremental training."""

    name = None
    default_hidden = (400, 400)

    def __init__(self, input_dim, n_classes, params, rng):
        self.input_dim = input_dim
        self.n_classes = n_classes
        self.params = params
        self.rng = rng
        self.seen_classes = []
        self.mlp = self._build_net()

    def _build_net(self):
        hidden = self.params.hidden_dims or self.default_hidden
        return nncore.init_mlp([self.input_dim, *hidden, self.n_classes], self.rng)

    def class_mask(self, extra=()):
        mask = np.zeros(self.n_classes, dtype=bool)
        for c in list(self.seen_classes) + list(extra):
            mask[c] = True
        return mask

    def _register_task(self, task):
        for c in task.class_set:
            if c in self.seen_classes:
                raise ValueError(f"class {c} already trained; tasks are class-incremental")
            self.seen_classes.append(c)

    def train_task(self, task):
        raise NotImplementedError

    def predict(self, images):
        """Classify raw 8-bit images; argmax over logits of seen classes."""
        if not self.seen_classes:
            raise RuntimeError("no tasks trained yet")
        logits = nncore.forward(self.mlp, normalize(images)).logits
        return masked_argmax(logits, self.class_mask())


def masked_argmax(logits, class_mask):
    """Row-wise argmax restricted to the unmasked classes."""
    z = np.array(logits, dtype=np.float64)
    z[:, ~np.asarray(class_mask, dtype=bool)] = -np.inf
    return z.argmax(axis=1)


def minibatch_indices(n, batch_size, rng):
    """Seeded random reshuffle split into consecutive index chunks."""
    order = rng.permutation(n)
    return [order[s:s + batch_size] for s in range(0, n, batch_size)]

"""Bounded exemplar storage with reservoir, balanced, and herding policies."""

import numpy as np


def herd_select(features, m):
    """Greedy herding: pick up to m points whose running mean best tracks the
    full feature mean. Returns indices in selection (priority) order."""
    n = len(features)
    m = min(m, n)
    mu = features.mean(axis=0)
    chosen = []
    acc = np.zeros(features.shape[1])
    taken = np.zeros(n, dtype=bool)
    for k in range(1, m + 1):
        cand = (acc[None, :] + features) / k
        d2 = ((cand - mu[None, :]) ** 2).sum(axis=1)
        d2[taken] = np.inf
        pick = int(d2.argmin())
        chosen.append(pick)
        taken[pick] = True
        acc += features[pick]
    return chosen


class ExemplarBuffer:
    """Capacity-bounded store of (image, label[, logits]) exemplars.

    policy 'reservoir': classic reservoir sampling over the presentation
    stream (stream_index counts items seen so far). policy 'balanced':
    greedy class balancing -- evict from the largest class to admit an
    underrepresented one, capacity split evenly across seen classes.
    policy 'herding' stores per-class priority-ordered exemplar lists
    installed by the caller (selection itself is `herd_select`).
    """

    POLICIES = ("reservoir", "balanced", "herding")

    def __init__(self, capacity, policy):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        if policy not in self.POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        self.capacity = capacity
        self.policy = policy
        self.images = []
        self.labels = []
        self.logits = []
        self.stream_classes = set()
        self.version = 0

    def __len__(self):
        return len(self.labels)

    def class_counts(self):
        counts = {}
        for y in self.labels:
            counts[y] = counts.get(y, 0) + 1
        return counts

    def observe(self, image, label, stream_index, rng, logits=None):
        """Feed one stream item through the buffer's admission policy.

        stream_index is the 0-based position in the overall stream; for the
        reservoir policy it drives the retention probability capacity/N.
        """
        if self.policy == "reservoir":
            self._observe_reservoir(image, label, logits, stream_index, rng)
        elif self.policy == "balanced":
            self._observe_balanced(image, label, rng)
        else:
            raise ValueError("herding buffers are filled via set_class_exemplars")
        self.version += 1

    def _observe_reservoir(self, image, label, logits, stream_index, rng):
        if len(self.labels) < self.capacity:
            self.images.append(image)
            self.labels.append(label)
            self.logits.append(logits)
            return
        slot = int(rng.integers(0, stream_index + 1))
        if slot < self.capacity:
            self.images[slot] = image
            self.labels[slot] = label
            self.logits[slot] = logits

    def _observe_balanced(self, image, label, rng):
        self.stream_classes.add(label)
        if len(self.labels) < self.capacity:
            self.images.append(image)
            self.labels.append(label)
            self.logits.append(None)
            return
        counts = self.class_counts()
        if counts.get(label, 0) >= self.capacity / len(self.stream_classes):
            return
        largest = max(counts, key=lambda c: (counts[c], c))
        slots = [i for i, y in enumerate(self.labels) if y == largest]
        slot = slots[int(rng.integers(0, len(slots)))]
        self.images[slot] = image
        self.labels[slot] = label
        self.logits[slot] = None

    def sample(self, k, rng):
        """Uniform draw of k stored exemplars (without replacement when the
        buffer is large enough). Returns (images, labels, logits) arrays."""
        n = len(self.labels)
        if n == 0:
            raise ValueError("buffer is empty")
        idx = rng.choice(n, size=k, replace=n < k)
        images = np.stack([self.images[i] for i in idx])
        labels = np.asarray([self.labels[i] for i in idx])
        logit_rows = [self.logits[i] for i in idx]
        logits = np.stack(logit_rows) if logit_rows[0] is not None else None
        return images, labels, logits

    # herding policy: per-class priority lists managed by the caller

    def set_class_exemplars(self, label, images):
        if self.policy != "herding":
            raise ValueError("set_class_exemplars requires the herding policy")
        kept = [(img, y) for img, y in zip(self.images, self.labels) if y != label]
        self.images = [img for img, _ in kept] + list(images)
        self.labels = [y for _, y in kept] + [label] * len(images)
        self.logits = [None] * len(self.labels)
        if len(self.labels) > self.capacity:
            raise ValueError("herding exemplar sets exceed the buffer capacity")
        self.version += 1

    def class_exemplars(self, label):
        return [img for img, y in zip(self.images, self.labels) if y == label]

    def truncate_class(self, label, m):
        """Keep only the first m (highest-priority) exemplars of a class."""
        if self.policy != "herding":
            raise ValueError("truncate_class requires the herding policy")
        kept, seen = [], 0
        for img, y in zip(self.images, self.labels):
            if y == label:
                seen += 1
                if seen > m:
                    continue
            kept.append((img, y))
        self.images = [img for img, _ in kept]
        self.labels = [y for _, y in kept]
        self.logits = [None] * len(self.labels)
        self.version += 1

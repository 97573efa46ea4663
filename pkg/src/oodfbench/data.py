"""Dataset ingestion, class-incremental splitting, and shift construction.

Images are kept as raw 8-bit 28x28 grids end to end; occlusion strength is
specified in the same 8-bit units. Normalization to [0, 1] happens only at the
network boundary via `normalize`.
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from . import nncore

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
_MAGIC = {"images": IMAGE_MAGIC, "labels": LABEL_MAGIC}


class IdxFormatError(ValueError):
    pass


@dataclass
class RawDataset:
    """Labeled 8-bit image collection; images (N, 28, 28), labels in [0, 10)."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ValueError(f"{len(self.images)} images paired with {len(self.labels)} labels")

    def __len__(self):
        return len(self.labels)


@dataclass
class TaskDataset:
    """One class-incremental task; task_id is 1-based."""

    task_id: int
    images: np.ndarray
    labels: np.ndarray
    class_set: tuple

    def __len__(self):
        return len(self.labels)


@dataclass
class ShiftSpec:
    """Intra-class distribution shift parameters.

    kind 'occlusion': pixels at `positions` set to `strength` (8-bit value).
    kind 'fgsm': one-step adversarial perturbation of size `strength` in
    normalized units, computed against a reference model.
    `ratio` of the target task's samples get shifted; labels never change.
    """

    kind: str
    positions: tuple
    strength: float
    ratio: float
    target_task: int

    def __post_init__(self):
        if self.kind not in ("occlusion", "fgsm"):
            raise ValueError(f"unknown shift kind {self.kind!r}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must be in [0, 1], got {self.ratio}")
        for r, c in self.positions:
            if not (0 <= r < 28 and 0 <= c < 28):
                raise ValueError(f"position {(r, c)} outside 28x28 image")
        if self.kind == "occlusion" and not 0 <= self.strength <= 255:
            raise ValueError(f"occlusion strength must be an 8-bit value, got {self.strength}")
        if self.kind == "fgsm" and self.strength < 0:
            raise ValueError("fgsm step must be non-negative")


def square_positions(pixel_count, last_row=26, last_col=26):
    """Square block of `pixel_count` pixels whose bottom-right corner sits at
    (last_row, last_col). pixel_count must be a perfect square (1, 4, 9, 16...)."""
    side = int(round(pixel_count ** 0.5))
    if side * side != pixel_count:
        raise ValueError(f"pixel_count {pixel_count} is not a perfect square")
    rows = range(last_row - side + 1, last_row + 1)
    cols = range(last_col - side + 1, last_col + 1)
    return tuple((r, c) for r in rows for c in cols)


def load_idx(data, kind):
    """Parse an IDX byte stream of the given kind ('images' or 'labels')."""
    if kind not in _MAGIC:
        raise ValueError(f"kind must be 'images' or 'labels', got {kind!r}")
    if len(data) < 4:
        raise IdxFormatError("stream shorter than the magic word")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != _MAGIC[kind]:
        raise IdxFormatError(f"bad magic 0x{magic:08x} for {kind} (want 0x{_MAGIC[kind]:08x})")
    ndim = 3 if kind == "images" else 1
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxFormatError("truncated dimension header")
    dims = struct.unpack(">" + "I" * ndim, data[4:header])
    expected = int(np.prod(dims))
    payload = len(data) - header
    if payload != expected:
        raise IdxFormatError(f"payload holds {payload} bytes, dimensions {dims} declare {expected}")
    return np.frombuffer(data, dtype=np.uint8, offset=header).reshape(dims)


def load_idx_file(path, kind):
    with open(path, "rb") as f:
        return load_idx(f.read(), kind)


def load_raw(images_path, labels_path):
    """Load a paired IDX image/label file set into a RawDataset."""
    images = load_idx_file(images_path, "images")
    labels = load_idx_file(labels_path, "labels").astype(np.int64)
    if len(images) != len(labels):
        raise IdxFormatError(f"{images_path} holds {len(images)} images but {labels_path} holds {len(labels)} labels")
    return RawDataset(images, labels)


def split_by_class(ds, order):
    """Split into one task per class, ordered by `order` (a permutation of the
    label alphabet); within-task sample order follows the source dataset."""
    alphabet = np.unique(ds.labels)
    if sorted(order) != sorted(alphabet.tolist()):
        raise ValueError(f"order {order} is not a permutation of the classes {alphabet.tolist()}")
    tasks = []
    for t, cls in enumerate(order, start=1):
        idx = np.flatnonzero(ds.labels == cls)
        tasks.append(TaskDataset(t, ds.images[idx].copy(), ds.labels[idx].copy(), (int(cls),)))
    return tasks


def apply_occlusion(img, positions, strength):
    """Set the pixels at `positions` to `strength`; everything else untouched."""
    out = np.array(img, dtype=np.uint8, copy=True)
    for r, c in positions:
        if not (0 <= r < out.shape[0] and 0 <= c < out.shape[1]):
            raise ValueError(f"position {(r, c)} out of bounds for {out.shape}")
        out[r, c] = strength
    return out


def occlude_batch(images, positions, strength):
    out = np.array(images, dtype=np.uint8, copy=True)
    for r, c in positions:
        out[:, r, c] = strength
    return out


def normalize(images):
    """Map 8-bit images to flat float64 vectors in [0, 1] (divide by 255).

    Accepts one image (H, W) or a batch (N, H, W); returns (N, H*W).
    """
    arr = np.asarray(images, dtype=np.float64) / 255.0
    if arr.ndim == 2:
        arr = arr[None]
    return np.ascontiguousarray(arr.reshape(len(arr), -1))


def apply_fgsm(mlp, img, label, eps):
    """One-step sign perturbation in normalized space, mapped back to 8 bits:
    x' = clip(x + eps * sign(d loss / d x), 0, 1)."""
    return fgsm_batch(mlp, np.asarray(img)[None], np.asarray([label]), eps)[0]


def fgsm_batch(mlp, images, labels, eps):
    if eps < 0:
        raise ValueError("eps must be non-negative")
    x = normalize(images)
    trace = nncore.forward(mlp, x)
    _, dlogits = nncore.softmax_cross_entropy(trace.logits, labels)
    grads = nncore.backward(mlp, trace, dlogits, want_input_grad=True)
    shifted = np.clip(x + eps * np.sign(grads.dinput), 0.0, 1.0)
    return np.rint(shifted * 255.0).astype(np.uint8).reshape(np.asarray(images).shape)


def build_shifted_task(task, spec, rng, model=None):
    """Replace floor(ratio * n) uniformly chosen samples with shifted versions.

    Labels and sample count are untouched. FGSM shifts need the reference
    `model` the perturbation is computed against.
    """
    n = len(task)
    n_shift = int(np.floor(spec.ratio * n))
    idx = rng.choice(n, size=n_shift, replace=False)
    images = task.images.copy()
    if spec.kind == "occlusion":
        images[idx] = occlude_batch(images[idx], spec.positions, spec.strength)
    else:
        if model is None:
            raise ValueError("fgsm shift needs the reference model")
        images[idx] = fgsm_batch(model, images[idx], task.labels[idx], spec.strength)
    return TaskDataset(task.task_id, images, task.labels.copy(), task.class_set)


def build_joint_dataset(tasks, target_task, shifted_task):
    """Concatenate all tasks with task `target_task` replaced by its shifted
    version; sample order within and across tasks is preserved."""
    if shifted_task.task_id != target_task:
        raise ValueError(f"shifted task id {shifted_task.task_id} != target {target_task}")
    parts = [shifted_task if t.task_id == target_task else t for t in tasks]
    images = np.concatenate([p.images for p in parts])
    labels = np.concatenate([p.labels for p in parts])
    return RawDataset(images, labels)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dataset_manifest(paths):
    """Plain-text manifest of IDX files: name, element count, sha256 per line."""
    lines = []
    for kind, path in paths:
        arr = load_idx_file(path, kind)
        lines.append(f"{path}\tkind={kind}\tcount={len(arr)}\tsha256={sha256_file(path)}")
    return "\n".join(lines) + "\n"

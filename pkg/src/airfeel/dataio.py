"""Dataset ingestion: IDX container files, synthetic blobs, sharding."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """IDX container is malformed or the image/label pair disagrees."""


@dataclass
class Dataset:
    features: np.ndarray  # n_samples x n_dims, scaled to [0, 1]
    labels: np.ndarray  # integers in [0, n_classes)
    n_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError("features must be 2-D (samples x dims)")
        if len(self.features) != len(self.labels):
            raise ValueError(
                f"{len(self.features)} feature rows vs {len(self.labels)} labels"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.n_classes
        ):
            raise ValueError("labels outside [0, n_classes)")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices) -> "Dataset":
        return Dataset(self.features[indices], self.labels[indices], self.n_classes)


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise IdxFormatError(f"truncated file: expected {n} bytes of {what}")
    return data


def load_idx(images_path, labels_path, n_classes: int | None = None) -> Dataset:
    """Parse a big-endian IDX image/label file pair.

    Pixel bytes are scaled by 1/255 and images flattened row-major.
    """
    with open(images_path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, "image header"))
        if magic != IDX_IMAGE_MAGIC:
            raise IdxFormatError(
                f"bad magic 0x{magic:08x} in image file, expected 0x{IDX_IMAGE_MAGIC:08x}"
            )
        pixels = np.frombuffer(
            _read_exact(f, count * rows * cols, "pixel data"), dtype=np.uint8
        )
    with open(labels_path, "rb") as f:
        magic, label_count = struct.unpack(">II", _read_exact(f, 8, "label header"))
        if magic != IDX_LABEL_MAGIC:
            raise IdxFormatError(
                f"bad magic 0x{magic:08x} in label file, expected 0x{IDX_LABEL_MAGIC:08x}"
            )
        labels = np.frombuffer(_read_exact(f, label_count, "label data"), dtype=np.uint8)
    if count != label_count:
        raise IdxFormatError(f"count mismatch: {count} images vs {label_count} labels")
    features = pixels.reshape(count, rows * cols).astype(float) / 255.0
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if labels.size else 1
    return Dataset(features, labels.astype(np.int64), n_classes)


def write_idx_images(path, images: np.ndarray, rows: int, cols: int) -> None:
    """Write uint8 images (n x rows*cols) as an IDX container."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, len(images), rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, len(labels)))
        f.write(labels.tobytes())


def synthetic(
    seed: int,
    n_samples: int,
    n_dims: int,
    n_classes: int,
    separation: float,
) -> Dataset:
    """Gaussian blobs: class centers are seeded random unit directions
    scaled by `separation`, with unit isotropic noise; features are
    min-max rescaled to [0, 1].  Labels are balanced round-robin."""
    if n_classes < 2:
        raise ValueError("need n_classes >= 2")
    if not separation > 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(n_classes, n_dims))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    centers = separation * directions
    labels = np.arange(n_samples) % n_classes
    features = centers[labels] + rng.normal(size=(n_samples, n_dims))
    order = rng.permutation(n_samples)
    features, labels = features[order], labels[order]
    lo, hi = features.min(), features.max()
    if hi > lo:
        features = (features - lo) / (hi - lo)
    else:
        features = np.full_like(features, 0.5)
    return Dataset(features, labels, n_classes)


def shard(dataset: Dataset, n_devices: int, scheme: str = "iid", seed: int = 0):
    """Split into disjoint per-device index arrays covering the dataset.

    iid: seeded shuffle then contiguous split; label_sorted: stable sort
    by label then split, giving each device a label-skewed shard.
    """
    n = len(dataset)
    if n_devices > n:
        raise ValueError(f"cannot shard {n} samples across {n_devices} devices")
    if scheme == "iid":
        order = np.random.default_rng(np.random.SeedSequence(int(seed))).permutation(n)
    elif scheme == "label_sorted":
        order = np.argsort(dataset.labels, kind="stable")
    else:
        raise ValueError(f"unknown shard scheme {scheme!r}")
    return np.array_split(order, n_devices)

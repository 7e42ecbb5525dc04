"""MNIST IDX ingestion and desk-scale preprocessing."""
from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict

import numpy as np

from .errors import ConfigurationError, DataError, FormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


@dataclass(frozen=True, eq=False)
class RawDataset:
    images: np.ndarray  # (N, rows, cols) uint8
    labels: np.ndarray  # (N,) uint8

    def __len__(self):
        return self.labels.size


@dataclass(frozen=True, eq=False)
class Dataset:
    images: np.ndarray  # (N, H, W) float64 in [0, 1]
    labels: np.ndarray  # (N,) int64 in [0, C)
    class_map: Dict[int, int]
    source_index: np.ndarray = field(repr=False)  # row in the raw pool each sample came from

    def __post_init__(self):
        if self.images.shape[0] != self.labels.size:
            raise ConfigurationError(f"{self.images.shape[0]} images but {self.labels.size} labels")
        for arr in (self.images, self.labels, self.source_index):
            arr.setflags(write=False)

    def __len__(self):
        return self.labels.size

    @property
    def n_classes(self):
        return len(self.class_map)

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.images[idx].copy(), self.labels[idx].copy(), dict(self.class_map), self.source_index[idx].copy())


def _read_bytes(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(raw, expected_magic, what, ndim):
    if len(raw) < 4:
        raise FormatError(f"{what}: file shorter than the 4-byte magic number")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(f"{what}: expected {what} magic 0x{expected_magic:08X}, got 0x{magic:08X}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{what}: truncated header, need {header} bytes, file has {len(raw)}")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) - header < size:
        raise FormatError(
            f"{what}: truncated data section at byte offset {len(raw)}; "
            f"header promises {size} bytes starting at offset {header}"
        )
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path):
    """Parse an IDX image/label file pair (plain or gzip-compressed)."""
    images = _parse_idx(_read_bytes(images_path), IMAGE_MAGIC, "image", 3)
    labels = _parse_idx(_read_bytes(labels_path), LABEL_MAGIC, "label", 1)
    if images.shape[0] != labels.size:
        raise FormatError(f"count mismatch: {images.shape[0]} images vs {labels.size} labels")
    return RawDataset(images.copy(), labels.copy())


def _find(data_dir, stem):
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        p = data_dir / name
        if p.is_file():
            return p
    return None


def resolve_data_dir(data_dir=None):
    data_dir = data_dir or os.environ.get("MNIST_DATA_DIR")
    if not data_dir:
        raise DataError("no data directory given (use --data-dir or MNIST_DATA_DIR)")
    return Path(data_dir)


def load_mnist(data_dir=None):
    """Load the MNIST pool in ``data_dir``: training files plus test files if present.

    Train and test samples are pooled; :func:`preprocess` draws its own
    disjoint splits from the pool.
    """
    data_dir = resolve_data_dir(data_dir)
    if not data_dir.is_dir():
        raise DataError(f"data directory not found: {data_dir}")
    parts = []
    for split, (img, lab) in MNIST_FILES.items():
        ip, lp = _find(data_dir, img), _find(data_dir, lab)
        if ip is None or lp is None:
            if split == "train":
                raise DataError(f"missing {img} / {lab} in {data_dir}")
            continue
        parts.append(load_idx(ip, lp))
    return RawDataset(
        np.concatenate([p.images for p in parts]), np.concatenate([p.labels for p in parts])
    )


def pool2x2(images):
    """2x2 average pooling over the last two axes."""
    images = np.asarray(images, dtype=np.float64)
    *lead, h, w = images.shape
    if h % 2 or w % 2:
        raise ConfigurationError(f"cannot 2x2-pool a {h}x{w} image")
    return images.reshape(*lead, h // 2, 2, w // 2, 2).mean(axis=(-3, -1))


def normalize_images(images):
    """Bytes to [0, 1], then 2x2 average pooling."""
    return pool2x2(np.asarray(images, dtype=np.float64) / 255.0)


def _balanced_counts(total, n_classes):
    base, extra = divmod(total, n_classes)
    return [base + (1 if k < extra else 0) for k in range(n_classes)]


def preprocess(raw, classes=(0, 1), train_n=200, test_n=100, seed=0, downsample=True):
    """Class-balanced, disjoint train/test subsets of ``raw``.

    Labels are remapped to ``0..C-1`` in the order given by ``classes``.
    """
    classes = [int(c) for c in classes]
    if len(set(classes)) != len(classes) or len(classes) < 2:
        raise ConfigurationError(f"need at least two distinct classes, got {classes}")
    if train_n < 1 or test_n < 1:
        raise ConfigurationError("train and test sizes must be positive")
    rng = np.random.default_rng(seed)
    train_counts = _balanced_counts(train_n, len(classes))
    test_counts = _balanced_counts(test_n, len(classes))
    train_idx, test_idx = [], []
    for digit, n_tr, n_te in zip(classes, train_counts, test_counts):
        pool = np.flatnonzero(raw.labels == digit)
        if pool.size < n_tr + n_te:
            raise ConfigurationError(
                f"digit {digit}: {pool.size} samples available, {n_tr + n_te} requested"
            )
        pool = rng.permutation(pool)
        train_idx.append(pool[:n_tr])
        test_idx.append(pool[n_tr : n_tr + n_te])
    class_map = {d: k for k, d in enumerate(classes)}

    def build(parts):
        idx = rng.permutation(np.concatenate(parts))
        images = raw.images[idx]
        images = normalize_images(images) if downsample else images.astype(np.float64) / 255.0
        labels = np.array([class_map[int(d)] for d in raw.labels[idx]], dtype=np.int64)
        return Dataset(images, labels, dict(class_map), idx)

    return build(train_idx), build(test_idx)


def write_idx(path, array):
    """Write a uint8 array as an IDX file (gzip-compressed when ``path`` ends in .gz)."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = IMAGE_MAGIC if array.ndim == 3 else LABEL_MAGIC if array.ndim == 1 else None
    if magic is None:
        raise ConfigurationError("only 1-d label and 3-d image arrays are supported")
    payload = struct.pack(f">I{array.ndim}I", magic, *array.shape) + array.tobytes()
    path = Path(path)
    if path.suffix == ".gz":
        # mtime=0 keeps the output byte-reproducible
        payload = gzip.compress(payload, mtime=0)
    path.write_bytes(payload)

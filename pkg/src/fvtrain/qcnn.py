"""Single-layer quanvolutional network with a fully-connected softmax head."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
from math import isqrt
from typing import List, Tuple

import numpy as np

from . import qsim
from .ansatz import CircuitSpec, FilterParams, build_random_ansatz, embed_batch, random_angles, run_filter_batch
from .errors import ConfigurationError, ShapeError

FC_INIT_SCALE = 0.1


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Filter bank plus classifier head.

    ``fc_weights`` has shape ``(C, F)`` with ``F = L * n_windows * n_qubits``;
    features are laid out filter-major, then window (row-major), then qubit.
    """

    filters: Tuple[Tuple[CircuitSpec, FilterParams], ...]
    fc_weights: np.ndarray
    fc_bias: np.ndarray
    image_shape: Tuple[int, int]
    patch: int
    stride: int

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        if len(self.filters) < 2:
            raise ConfigurationError(f"need at least two filters, got {len(self.filters)}")
        n = self.filters[0][0].n_qubits
        for spec, params in self.filters:
            if spec.n_qubits != n:
                raise ConfigurationError("all filters must act on the same number of qubits")
            if len(params) != spec.n_params:
                raise ShapeError(f"{len(params)} angles for a circuit with {spec.n_params} parameters")
        if self.patch * self.patch != n:
            raise ConfigurationError(f"{self.patch}x{self.patch} patch does not fill {n} qubits")
        n_windows(self.image_shape, self.patch, self.stride)
        w = np.asarray(self.fc_weights, dtype=np.float64)
        b = np.asarray(self.fc_bias, dtype=np.float64).reshape(-1)
        if w.shape != (b.size, self.n_features):
            raise ShapeError(f"fc_weights {w.shape} vs expected {(b.size, self.n_features)}")
        object.__setattr__(self, "fc_weights", w)
        object.__setattr__(self, "fc_bias", b)
        object.__setattr__(self, "image_shape", tuple(int(s) for s in self.image_shape))

    @property
    def n_filters(self):
        return len(self.filters)

    @property
    def n_qubits(self):
        return self.filters[0][0].n_qubits

    @property
    def n_classes(self):
        return self.fc_bias.size

    @property
    def n_windows(self):
        return n_windows(self.image_shape, self.patch, self.stride)

    @property
    def n_features(self):
        return self.n_filters * self.n_windows * self.n_qubits

    def with_params(self, angles, fc_weights, fc_bias):
        """Copy with new trainable values; circuit structure is shared."""
        filters = tuple((spec, FilterParams(a)) for (spec, _), a in zip(self.filters, angles))
        return replace(self, filters=filters, fc_weights=fc_weights, fc_bias=fc_bias)


@dataclass
class QuanvOutput:
    states: List[List[qsim.StateVector]]  # [filter][window]
    features: np.ndarray = field(repr=False)


def n_windows(image_shape, patch, stride):
    h, w = image_shape
    if h < patch or w < patch or (h - patch) % stride or (w - patch) % stride:
        raise ShapeError(f"image {h}x{w} not tiled by {patch}x{patch} patches at stride {stride}")
    return ((h - patch) // stride + 1) * ((w - patch) // stride + 1)


def extract_patches(images, patch, stride):
    """Windows of a stack of images, shape (batch, n_windows, patch * patch)."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 2:
        images = images[None]
    b, h, w = images.shape
    n_windows((h, w), patch, stride)
    rows = range(0, h - patch + 1, stride)
    cols = range(0, w - patch + 1, stride)
    out = [images[:, r : r + patch, c : c + patch].reshape(b, -1) for r in rows for c in cols]
    return np.stack(out, axis=1)


def default_patch(n_qubits):
    k = isqrt(n_qubits)
    if k * k != n_qubits:
        raise ConfigurationError(f"square patches need a square qubit count, got {n_qubits}")
    return k


def init_model(seed, n_filters=2, n_qubits=4, depth=2, n_classes=2, image_shape=(14, 14), patch=None, stride=None):
    """Fresh model: random ansatz structures and angles, uniform FC weights, zero bias."""
    if n_filters < 2:
        raise ConfigurationError(f"need at least two filters, got {n_filters}")
    if n_classes < 2:
        raise ConfigurationError(f"need at least two classes, got {n_classes}")
    patch = default_patch(n_qubits) if patch is None else patch
    stride = patch if stride is None else stride
    rng = np.random.default_rng(seed)
    structure_seeds = rng.integers(0, 2**63 - 1, size=n_filters)
    filters = []
    for s in structure_seeds:
        spec = build_random_ansatz(int(s), n_qubits, depth)
        filters.append((spec, random_angles(rng, spec.n_params)))
    f = n_filters * n_windows(image_shape, patch, stride) * n_qubits
    weights = rng.uniform(-FC_INIT_SCALE, FC_INIT_SCALE, size=(n_classes, f))
    return ModelParams(tuple(filters), weights, np.zeros(n_classes), tuple(image_shape), patch, stride)


# -- forward pass --------------------------------------------------------------


def _check_images(model, images):
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 2:
        images = images[None]
    if images.shape[1:] != model.image_shape:
        raise ShapeError(f"image of shape {images.shape[1:]} for a model built for {model.image_shape}")
    return images


def quanv_batch(model, images):
    """Filter output amplitudes and features for a stack of images.

    Returns ``(amps, features, embedded)`` where ``amps`` has shape
    ``(L, batch * n_windows, 2**n)``, ``features`` has shape ``(batch, F)``
    and ``embedded`` is the shared input encoding, reusable for shifted runs.
    """
    images = _check_images(model, images)
    b = images.shape[0]
    patches = extract_patches(images, model.patch, model.stride).reshape(-1, model.n_qubits)
    embedded = embed_batch(patches)
    amps = np.stack(
        [run_filter_batch(spec, p.angles, patches, embedded=embedded) for spec, p in model.filters]
    )
    z = np.stack([qsim.expz_batch(a, model.n_qubits) for a in amps])  # (L, b*W, n)
    z = np.clip(z, -1.0, 1.0).reshape(model.n_filters, b, model.n_windows, model.n_qubits)
    features = z.transpose(1, 0, 2, 3).reshape(b, -1)
    return amps, features, embedded


def quanv_forward(model, image):
    amps, features, _ = quanv_batch(model, image)
    if features.shape[0] != 1:
        raise ShapeError("quanv_forward takes a single image")
    states = [[qsim.StateVector(model.n_qubits, row) for row in filt] for filt in amps]
    return QuanvOutput(states, features[0])


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def logits_from_features(model, features):
    return features @ model.fc_weights.T + model.fc_bias


def predict_batch(model, images):
    _, features, _ = quanv_batch(model, images)
    logits = logits_from_features(model, features)
    return softmax(logits), logits


def predict(model, image):
    probs, logits = predict_batch(model, image)
    if probs.shape[0] != 1:
        raise ShapeError("predict takes a single image")
    return probs[0], logits[0]


# -- filter similarity ---------------------------------------------------------


def filter_pairs(n_filters):
    return list(combinations(range(n_filters), 2))


def pairwise_fidelity_batch(amps, batch, n_windows):
    """Per-image mean over filter pairs and windows, shape (batch,)."""
    n_filters = amps.shape[0]
    if n_filters < 2:
        raise ConfigurationError("pairwise fidelity needs at least two filters")
    total = np.zeros(batch * n_windows)
    pairs = filter_pairs(n_filters)
    for l, m in pairs:
        total += qsim.overlap_sq_batch(amps[l], amps[m])
    per_image = total.reshape(batch, n_windows).mean(axis=1) / len(pairs)
    return np.clip(per_image, 0.0, 1.0)


def pairwise_fidelity_mean(output):
    """Mean fidelity over all unordered filter pairs and window positions."""
    states = output.states
    if len(states) < 2:
        raise ConfigurationError("pairwise fidelity needs at least two filters")
    values = [
        qsim.fidelity(a, b)
        for l, m in filter_pairs(len(states))
        for a, b in zip(states[l], states[m])
    ]
    return float(np.clip(np.mean(values), 0.0, 1.0))

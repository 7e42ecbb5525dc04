"""The FV-Train loop: mini-batch SGD on cross-entropy plus the fidelity term.

``lam = 0`` is Vanilla-Train. Batch order comes from a PCG64 generator
seeded with ``(seed, SHUFFLE_STREAM)`` and reshuffled every epoch; the
model initialization uses ``init_seed`` (``seed`` when unset).
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import CalibrationError, ConfigurationError, DomainError, NumericDivergenceError
from .grad import loss_and_gradient
from .loss import check_form
from .qcnn import init_model, logits_from_features, pairwise_fidelity_batch, quanv_batch

log = logging.getLogger(__name__)

SHUFFLE_STREAM = 0x5EED
EVAL_CHUNK = 256
LR_SCHEDULES = ("constant", "linear")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    batch_size: int = 10
    learning_rate: float = 0.1
    lam: float = 0.0
    fv_form: str = "eq1"
    seed: int = 0
    init_seed: Optional[int] = None
    n_filters: int = 2
    n_qubits: int = 4
    depth: int = 2
    lr_schedule: str = "constant"

    def __post_init__(self):
        for name in ("epochs", "batch_size", "n_filters", "n_qubits", "depth"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.n_filters < 2:
            raise ConfigurationError("the fidelity term needs at least two filters")
        if self.learning_rate < 0:
            raise ConfigurationError(f"learning rate must be non-negative, got {self.learning_rate}")
        if self.lam < 0:
            raise ConfigurationError(f"lambda must be non-negative, got {self.lam}")
        if self.lr_schedule not in LR_SCHEDULES:
            raise ConfigurationError(f"lr_schedule must be one of {LR_SCHEDULES}")
        check_form(self.fv_form)

    @property
    def model_seed(self):
        return self.seed if self.init_seed is None else self.init_seed

    @property
    def mode(self):
        return "vanilla" if self.lam == 0 else "fv"

    def lr_at(self, epoch):
        """Step size for 1-based ``epoch``."""
        if self.lr_schedule == "linear":
            return self.learning_rate * (1.0 - (epoch - 1) / self.epochs)
        return self.learning_rate

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MetricsRecord:
    epoch: int
    train_loss: float
    ce_loss: float
    fv_loss: float
    mean_fidelity: float
    test_accuracy: float

    def __post_init__(self):
        if not 0.0 <= self.mean_fidelity <= 1.0:
            raise DomainError(f"mean fidelity {self.mean_fidelity} outside [0, 1]")
        if not 0.0 <= self.test_accuracy <= 1.0:
            raise DomainError(f"accuracy {self.test_accuracy} outside [0, 1]")


def build_model(config, dataset):
    return init_model(
        config.model_seed,
        n_filters=config.n_filters,
        n_qubits=config.n_qubits,
        depth=config.depth,
        n_classes=dataset.n_classes,
        image_shape=dataset.images.shape[1:],
    )


def _chunks(n, size):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def dataset_fidelity(model, images):
    """Per-image mean pairwise filter fidelity."""
    out = []
    for sl in _chunks(len(images), EVAL_CHUNK):
        amps, _, _ = quanv_batch(model, images[sl])
        out.append(pairwise_fidelity_batch(amps, sl.stop - sl.start, model.n_windows))
    return np.concatenate(out)


def evaluate(model, dataset):
    """Top-1 accuracy (ties go to the lowest class index) and mean filter fidelity."""
    if len(dataset) == 0:
        raise ConfigurationError("cannot evaluate on an empty dataset")
    correct = 0
    fid = []
    for sl in _chunks(len(dataset), EVAL_CHUNK):
        amps, features, _ = quanv_batch(model, dataset.images[sl])
        logits = logits_from_features(model, features)
        correct += int(np.sum(np.argmax(logits, axis=1) == dataset.labels[sl]))
        fid.append(pairwise_fidelity_batch(amps, sl.stop - sl.start, model.n_windows))
    mean_fid = float(np.clip(np.mean(np.concatenate(fid)), 0.0, 1.0))
    return correct / len(dataset), mean_fid


def sgd_step(model, grad, lr):
    angles = [p.angles - lr * g for (_, p), g in zip(model.filters, grad.angles)]
    return model.with_params(angles, model.fc_weights - lr * grad.fc_weights, model.fc_bias - lr * grad.fc_bias)


def train(config, train_set, test_set, model=None, include_fv=True, on_epoch=None):
    """Run ``config.epochs`` epochs of SGD; returns ``(model, records)``.

    ``include_fv=False`` removes the regularizer from the gradient code path
    (only meaningful as a cross-check for ``lam == 0``). ``on_epoch`` is
    called with each :class:`MetricsRecord` and the epoch wall time.
    """
    if len(train_set) == 0 or len(test_set) == 0:
        raise ConfigurationError("training and test sets must be non-empty")
    if model is None:
        model = build_model(config, train_set)
    rng = np.random.default_rng((config.seed, SHUFFLE_STREAM))
    n = len(train_set)
    records = []
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        lr = config.lr_at(epoch)
        order = rng.permutation(n)
        sums = np.zeros(3)
        for b, sl in enumerate(_chunks(n, config.batch_size)):
            idx = order[sl]
            loss, grad = loss_and_gradient(
                model, train_set.images[idx], train_set.labels[idx], config.lam, config.fv_form, include_fv
            )
            if not np.isfinite(loss.total) or not grad.is_finite():
                raise NumericDivergenceError(
                    f"non-finite loss or gradient at epoch {epoch}, batch {b}", epoch=epoch, batch=b
                )
            sums += len(idx) * np.array([loss.total, loss.ce, loss.fv])
            model = sgd_step(model, grad, lr)
        acc, fid = evaluate(model, test_set)
        total, ce, fv = sums / n
        record = MetricsRecord(epoch, float(total), float(ce), float(fv), fid, acc)
        records.append(record)
        elapsed = time.perf_counter() - start
        log.info(
            "epoch %d loss %.4f ce %.4f fv %.4f fid %.4f acc %.3f (%.1fs)",
            epoch, total, ce, fv, fid, acc, elapsed,
        )
        if on_epoch is not None:
            on_epoch(record, elapsed)
    return model, records


def calibrate_initial_fidelity(target, tolerance, seed_range, images, n_filters=2, n_qubits=4, depth=2, n_classes=2):
    """First seed whose fresh model has dataset-mean filter fidelity within ``tolerance`` of ``target``.

    Returns ``(seed, fidelity)``. Raises :class:`CalibrationError` carrying
    the closest seed seen when the range is exhausted.
    """
    if not 0.0 < target <= 1.0:
        raise DomainError(f"target fidelity must lie in (0, 1], got {target}")
    images = np.asarray(images, dtype=np.float64)
    best_seed, best_fid = None, None
    for seed in seed_range:
        model = init_model(seed, n_filters, n_qubits, depth, n_classes, images.shape[1:])
        fid = float(np.mean(dataset_fidelity(model, images)))
        if abs(fid - target) <= tolerance:
            return int(seed), fid
        if best_fid is None or abs(fid - target) < abs(best_fid - target):
            best_seed, best_fid = int(seed), fid
    raise CalibrationError(
        f"no seed reached fidelity {target} +/- {tolerance}; closest was seed {best_seed} at {best_fid}",
        best_seed=best_seed,
        best_fidelity=best_fid,
    )

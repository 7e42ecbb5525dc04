"""Gradients of the training objective.

Circuit angles are differentiated with the two-term parameter-shift rule,
which is exact for half-angle Pauli rotations. The classifier head uses
ordinary softmax/cross-entropy backprop. :func:`numerical_gradient` is a
central finite-difference oracle over the forward pass only and is used by
the test-suite, never by training.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import qsim
from .ansatz import run_filter, run_filter_batch
from .errors import ConfigurationError, ShapeError
from .loss import LossBreakdown, check_form, fv_regularizer, fv_sign, PROB_FLOOR
from .qcnn import filter_pairs, logits_from_features, pairwise_fidelity_batch, quanv_batch, softmax

SHIFT = np.pi / 2
FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class GradientVector:
    angles: Tuple[np.ndarray, ...]
    fc_weights: np.ndarray
    fc_bias: np.ndarray

    def flat(self):
        return np.concatenate([*self.angles, self.fc_weights.ravel(), self.fc_bias])

    def is_finite(self):
        return bool(np.all(np.isfinite(self.flat())))


def param_shift_feature_grad(spec, params, patch, param_index, qubit):
    """d<Z_qubit>/d theta_j of a single filter on a single patch."""
    if not 0 <= qubit < spec.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {spec.n_qubits} qubits")
    patch = np.asarray(patch, dtype=np.float64).reshape(1, -1)
    plus = run_filter_batch(spec, params.angles, patch, shift=(param_index, SHIFT))
    minus = run_filter_batch(spec, params.angles, patch, shift=(param_index, -SHIFT))
    zp = qsim.expz_batch(plus, spec.n_qubits)[0, qubit]
    zm = qsim.expz_batch(minus, spec.n_qubits)[0, qubit]
    return float((zp - zm) / 2)


def param_shift_fidelity_grad(spec, params, frozen_state, patch, param_index):
    """d|<psi_partner|psi(theta)>|^2 / d theta_j with the partner state held fixed."""
    if frozen_state.n_qubits != spec.n_qubits:
        raise ShapeError(f"partner state on {frozen_state.n_qubits} qubits, filter on {spec.n_qubits}")
    patch = np.asarray(patch, dtype=np.float64).reshape(1, -1)
    partner = frozen_state.amplitudes[None, :]
    plus = run_filter_batch(spec, params.angles, patch, shift=(param_index, SHIFT))
    minus = run_filter_batch(spec, params.angles, patch, shift=(param_index, -SHIFT))
    return float((qsim.overlap_sq_batch(partner, plus) - qsim.overlap_sq_batch(partner, minus))[0] / 2)


def fc_backward(features, probs, label, fc_weights):
    """Softmax + cross-entropy backprop for one sample.

    Returns ``(weight_grad, bias_grad, feature_grad)``.
    """
    features = np.asarray(features, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    fc_weights = np.asarray(fc_weights, dtype=np.float64)
    if fc_weights.shape != (probs.size, features.size):
        raise ShapeError(f"fc_weights {fc_weights.shape} vs probs {probs.size} x features {features.size}")
    if not 0 <= label < probs.size:
        raise IndexError(f"label {label} out of range for {probs.size} classes")
    dlogit = probs.copy()
    dlogit[label] -= 1.0
    return np.outer(dlogit, features), dlogit, fc_weights.T @ dlogit


def _check_batch(model, images, labels):
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 2:
        images = images[None]
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if images.shape[0] == 0:
        raise ConfigurationError("empty batch")
    if images.shape[0] != labels.size:
        raise ShapeError(f"{images.shape[0]} images but {labels.size} labels")
    if labels.min() < 0 or labels.max() >= model.n_classes:
        raise IndexError(f"labels must lie in [0, {model.n_classes})")
    return images, labels


def _breakdown(probs, labels, fid, lam, form):
    ce = -np.log(np.maximum(probs[np.arange(labels.size), labels], PROB_FLOOR))
    fv = np.array([fv_regularizer(f, form) for f in fid])
    return LossBreakdown(
        ce=float(ce.mean()), fv=float(fv.mean()), total=float((ce + lam * fv).mean()), lam=float(lam)
    )


def batch_loss(model, images, labels, lam, form="eq1"):
    """Forward pass only: the batch objective and its parts."""
    check_form(form)
    images, labels = _check_batch(model, images, labels)
    amps, features, _ = quanv_batch(model, images)
    probs = softmax(logits_from_features(model, features))
    fid = pairwise_fidelity_batch(amps, images.shape[0], model.n_windows)
    return _breakdown(probs, labels, fid, lam, form)


def loss_and_gradient(model, images, labels, lam, form="eq1", include_fv=True):
    """Batch-mean objective and its exact gradient.

    ``include_fv=False`` drops the regularizer path from the angle gradients
    entirely; with ``lam == 0`` both settings give identical results.
    """
    check_form(form)
    if lam < 0:
        raise ConfigurationError(f"lambda must be non-negative, got {lam}")
    images, labels = _check_batch(model, images, labels)
    b = images.shape[0]
    n, n_win, n_filt = model.n_qubits, model.n_windows, model.n_filters

    amps, features, embedded = quanv_batch(model, images)
    probs = softmax(logits_from_features(model, features))
    fid = pairwise_fidelity_batch(amps, b, n_win)
    loss = _breakdown(probs, labels, fid, lam if include_fv else 0.0, form)

    dlogit = probs.copy()
    dlogit[np.arange(b), labels] -= 1.0
    dlogit /= b
    w_grad = dlogit.T @ features
    b_grad = dlogit.sum(axis=0)
    feat_grad = (dlogit @ model.fc_weights).reshape(b, n_filt, n_win, n)

    pairs = filter_pairs(n_filt)
    # d(batch-mean fv)/d(overlap of one window pair)
    fv_scale = fv_sign(form) / (b * len(pairs) * n_win)

    angle_grads = []
    for l, (spec, params) in enumerate(model.filters):
        partners = [m for pair in pairs if l in pair for m in pair if m != l]
        ce_part = np.zeros(spec.n_params)
        fv_part = np.zeros(spec.n_params)
        for j in range(spec.n_params):
            plus = run_filter_batch(spec, params.angles, None, shift=(j, SHIFT), embedded=embedded)
            minus = run_filter_batch(spec, params.angles, None, shift=(j, -SHIFT), embedded=embedded)
            dz = (qsim.expz_batch(plus, n) - qsim.expz_batch(minus, n)) / 2
            ce_part[j] = np.sum(feat_grad[:, l] * dz.reshape(b, n_win, n))
            if include_fv:
                acc = 0.0
                for m in partners:
                    acc += np.sum(qsim.overlap_sq_batch(amps[m], plus) - qsim.overlap_sq_batch(amps[m], minus)) / 2
                fv_part[j] = fv_scale * acc
        angle_grads.append(ce_part + lam * fv_part if include_fv else ce_part)

    return loss, GradientVector(tuple(angle_grads), w_grad, b_grad)


def total_gradient(model, images, labels, lam, form="eq1"):
    return loss_and_gradient(model, images, labels, lam, form)[1]


def numerical_gradient(model, images, labels, lam, form="eq1", h=FD_STEP):
    """Central finite differences of :func:`batch_loss` over every parameter."""
    angles = [p.angles.copy() for _, p in model.filters]
    weights = model.fc_weights.copy()
    bias = model.fc_bias.copy()

    def total(a, w, c):
        return batch_loss(model.with_params(a, w, c), images, labels, lam, form).total

    def central(arr, idx, evaluate):
        orig = arr[idx]
        arr[idx] = orig + h
        up = evaluate()
        arr[idx] = orig - h
        down = evaluate()
        arr[idx] = orig
        return (up - down) / (2 * h)

    angle_grads = []
    for a in angles:
        g = np.zeros_like(a)
        for j in range(a.size):
            g[j] = central(a, j, lambda: total(angles, weights, bias))
        angle_grads.append(g)
    w_grad = np.zeros_like(weights)
    for idx in np.ndindex(weights.shape):
        w_grad[idx] = central(weights, idx, lambda: total(angles, weights, bias))
    b_grad = np.zeros_like(bias)
    for k in range(bias.size):
        b_grad[k] = central(bias, k, lambda: total(angles, weights, bias))
    return GradientVector(tuple(angle_grads), w_grad, b_grad)


def finite_difference(f, x, h=FD_STEP):
    """Central difference of a scalar function of one real variable."""
    return (f(x + h) - f(x - h)) / (2 * h)


def feature_grad_fd(spec, params, patch, param_index, qubit, h=FD_STEP):
    """Finite-difference counterpart of :func:`param_shift_feature_grad`."""

    def f(theta):
        a = params.angles.copy()
        a[param_index] = theta
        return run_filter(spec, params.replace(a), patch)[1][qubit]

    return finite_difference(f, params.angles[param_index], h)


def fidelity_grad_fd(spec, params, frozen_state, patch, param_index, h=FD_STEP):
    """Finite-difference counterpart of :func:`param_shift_fidelity_grad`."""

    def f(theta):
        a = params.angles.copy()
        a[param_index] = theta
        return qsim.fidelity(frozen_state, run_filter(spec, params.replace(a), patch)[0])

    return finite_difference(f, params.angles[param_index], h)

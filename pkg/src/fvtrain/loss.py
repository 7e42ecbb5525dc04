"""Cross-entropy, the fidelity-variation regularizer and the batch objective."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

PROB_FLOOR = 1e-12
FV_FORMS = ("eq1", "similarity")


@dataclass(frozen=True)
class LossBreakdown:
    ce: float
    fv: float
    total: float
    lam: float


def cross_entropy(probs, label):
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.size:
        raise IndexError(f"label {label} out of range for {probs.size} classes")
    return float(-np.log(max(probs[label], PROB_FLOOR)))


def check_form(form):
    if form not in FV_FORMS:
        raise ConfigurationError(f"fv form must be one of {FV_FORMS}, got {form!r}")
    return form


def fv_sign(form):
    """d(fv)/d(mean fidelity) for the chosen form."""
    return -1.0 if check_form(form) == "eq1" else 1.0


def fv_regularizer(mean_fid, form="eq1"):
    """``eq1``: 1 - mean fidelity (rewards similar filters when minimized).
    ``similarity``: the mean fidelity itself (pushes filters apart).
    """
    check_form(form)
    if not 0.0 <= mean_fid <= 1.0:
        raise DomainError(f"fidelity must lie in [0, 1], got {mean_fid!r}")
    return 1.0 - mean_fid if form == "eq1" else float(mean_fid)


def total_loss(samples, lam, form="eq1"):
    """Batch mean of ``CE + lam * FV`` over ``(probs, label, mean_fid)`` triples."""
    samples = list(samples)
    if not samples:
        raise ConfigurationError("empty batch")
    if lam < 0:
        raise ConfigurationError(f"lambda must be non-negative, got {lam}")
    ce = np.array([cross_entropy(p, y) for p, y, _ in samples])
    fv = np.array([fv_regularizer(f, form) for _, _, f in samples])
    return LossBreakdown(
        ce=float(ce.mean()),
        fv=float(fv.mean()),
        total=float((ce + lam * fv).mean()),
        lam=float(lam),
    )

"""Fidelity-variation training for quanvolutional neural networks."""

__version__ = "0.1.0"

"""Dense statevector simulation for small circuits.

Qubit 0 is the most significant bit of the basis index, so ``|10>`` is
index 2 on two qubits. Rotations follow the half-angle convention
``R_P(a) = exp(-i a P / 2)``.

The public single-state API (:func:`apply_gate`, :func:`expectation_z`,
:func:`fidelity`) sits on top of batched kernels that act on arrays of
shape ``(batch, 2**n)``; the model and the gradient code call the kernels
directly so a whole batch of image patches is simulated in one pass.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError, ShapeError

MAX_QUBITS = 12
NORM_TOL = 1e-10

ROTATIONS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATIONS + ("CNOT",)


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    control: Optional[int] = None
    angle: float = 0.0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in GATE_KINDS:
            raise ConfigurationError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "CNOT":
            if self.control is None:
                raise ConfigurationError("CNOT needs a control qubit")
            if self.control == self.target:
                raise ConfigurationError("CNOT control and target coincide")
        elif self.control is not None:
            raise ConfigurationError(f"{kind} takes no control qubit")

    def qubits(self):
        return (self.target,) if self.control is None else (self.control, self.target)


def rx(qubit, angle):
    return Gate("RX", qubit, angle=float(angle))


def ry(qubit, angle):
    return Gate("RY", qubit, angle=float(angle))


def rz(qubit, angle):
    return Gate("RZ", qubit, angle=float(angle))


def cnot(control, target):
    return Gate("CNOT", target, control=control)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state on ``n_qubits`` qubits.

    The amplitude buffer is marked read-only; operations return new states.
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != 2**self.n_qubits:
            raise ShapeError(
                f"{amps.size} amplitudes for {self.n_qubits} qubits (need {2**self.n_qubits})"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state is not normalized: <psi|psi> = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def __len__(self):
        return self.amplitudes.size

    def norm(self):
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))


def _check_n_qubits(n_qubits):
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")


def _check_qubit(qubit, n_qubits):
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")


def zero_state(n_qubits):
    _check_n_qubits(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def basis_state(bits):
    """Computational basis state from a bit string or sequence, qubit 0 first."""
    bits = [int(b) for b in bits]
    n = len(bits)
    _check_n_qubits(n)
    index = int("".join(map(str, bits)), 2)
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n, amps)


# -- batched kernels ---------------------------------------------------------
#
# ``amps`` has shape (batch, 2**n). Angles are scalars or arrays of shape
# (batch,). Kernels never modify their input.


def zero_batch(batch, n_qubits):
    amps = np.zeros((batch, 2**n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    return amps


def apply_rotation(amps, n_qubits, qubit, kind, angle):
    batch = amps.shape[0]
    v = amps.reshape(batch, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    x0 = v[:, :, 0, :]
    x1 = v[:, :, 1, :]
    half = np.asarray(angle, dtype=np.float64) / 2.0
    if half.ndim:
        half = half.reshape(-1, 1, 1)
    out = np.empty_like(v)
    if kind == "RZ":
        phase = np.exp(-1j * half)
        out[:, :, 0, :] = phase * x0
        out[:, :, 1, :] = np.conj(phase) * x1
    else:
        c = np.cos(half)
        s = np.sin(half)
        if kind == "RX":
            out[:, :, 0, :] = c * x0 - 1j * s * x1
            out[:, :, 1, :] = c * x1 - 1j * s * x0
        elif kind == "RY":
            out[:, :, 0, :] = c * x0 - s * x1
            out[:, :, 1, :] = s * x0 + c * x1
        else:
            raise ConfigurationError(f"not a rotation: {kind!r}")
    return out.reshape(amps.shape)


def apply_cnot(amps, n_qubits, control, target):
    batch = amps.shape[0]
    v = amps.reshape((batch,) + (2,) * n_qubits).copy()
    index = [slice(None)] * (n_qubits + 1)
    index[1 + control] = 1
    sub = v[tuple(index)]
    # the control axis is gone from ``sub``; shift the target axis accordingly
    axis = 1 + target - (1 if target > control else 0)
    sub[...] = np.flip(sub, axis=axis)
    return v.reshape(amps.shape)


def apply_gate_batch(amps, n_qubits, gate, angle=None):
    """Apply ``gate`` to every row of ``amps``.

    ``angle`` overrides ``gate.angle`` and may be per-row.
    """
    for q in gate.qubits():
        _check_qubit(q, n_qubits)
    if gate.kind == "CNOT":
        return apply_cnot(amps, n_qubits, gate.control, gate.target)
    return apply_rotation(amps, n_qubits, gate.target, gate.kind, gate.angle if angle is None else angle)


def expz_batch(amps, n_qubits):
    """<Z_q> for every row and qubit, shape (batch, n_qubits)."""
    batch = amps.shape[0]
    probs = (amps.real**2 + amps.imag**2).reshape((batch,) + (2,) * n_qubits)
    out = np.empty((batch, n_qubits))
    for q in range(n_qubits):
        axes = tuple(a for a in range(1, n_qubits + 1) if a != q + 1)
        marg = probs.sum(axis=axes) if axes else probs
        out[:, q] = marg[:, 0] - marg[:, 1]
    return out


def overlap_sq_batch(a, b):
    """Row-wise |<a|b>|^2."""
    inner = np.einsum("bi,bi->b", a.conj(), b)
    return inner.real**2 + inner.imag**2


# -- single-state API --------------------------------------------------------


def apply_gate(state, gate):
    out = apply_gate_batch(state.amplitudes[None, :], state.n_qubits, gate)
    return StateVector(state.n_qubits, out[0])


def apply_circuit(state, gates):
    amps = state.amplitudes[None, :]
    for g in gates:
        amps = apply_gate_batch(amps, state.n_qubits, g)
    return StateVector(state.n_qubits, amps[0])


def expectation_z(state, qubit):
    _check_qubit(qubit, state.n_qubits)
    value = expz_batch(state.amplitudes[None, :], state.n_qubits)[0, qubit]
    return float(np.clip(value, -1.0, 1.0))


def inner(a, b):
    """<a|b>."""
    if a.n_qubits != b.n_qubits:
        raise ShapeError(f"states on {a.n_qubits} and {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a, b):
    """Pure-state fidelity |<a|b>|^2, clipped to [0, 1]."""
    ov = inner(a, b)
    return float(min(1.0, ov.real**2 + ov.imag**2))

"""Random parameterized circuits used as quanvolutional filters.

Structure seeds feed :func:`numpy.random.default_rng`, i.e. the PCG64
generator with NumPy's SeedSequence expansion, so a ``(seed, n_qubits,
depth)`` triple rebuilds the same circuit on any platform.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import qsim
from .errors import ConfigurationError, DomainError, ShapeError


@dataclass(frozen=True)
class GateTemplate:
    """One slot of an ansatz: a trainable rotation or a fixed CNOT."""

    kind: str
    target: int
    control: Optional[int] = None
    param_index: Optional[int] = None

    @property
    def is_rotation(self):
        return self.kind != "CNOT"


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    ops: Tuple[GateTemplate, ...]
    n_params: int
    seed: Optional[int] = None
    depth: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        indices = sorted(op.param_index for op in self.ops if op.is_rotation)
        if indices != list(range(self.n_params)):
            raise ConfigurationError("every parameter index must appear exactly once")
        for op in self.ops:
            qubits = (op.target,) if op.control is None else (op.control, op.target)
            if any(not 0 <= q < self.n_qubits for q in qubits):
                raise ConfigurationError(f"{op} addresses a qubit outside 0..{self.n_qubits - 1}")
            if op.kind == "CNOT" and op.control == op.target:
                raise ConfigurationError("CNOT control and target coincide")

    def gates(self, angles):
        """Concrete gate list for the given angle vector."""
        return [
            qsim.Gate(op.kind, op.target, angle=float(angles[op.param_index]))
            if op.is_rotation
            else qsim.cnot(op.control, op.target)
            for op in self.ops
        ]

    def to_text(self):
        return circuit_to_text(self)


@dataclass(frozen=True, eq=False)
class FilterParams:
    angles: np.ndarray

    def __post_init__(self):
        angles = np.array(self.angles, dtype=np.float64).reshape(-1)
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)

    def __len__(self):
        return self.angles.size

    def __eq__(self, other):
        return isinstance(other, FilterParams) and np.array_equal(self.angles, other.angles)

    def replace(self, angles):
        return FilterParams(angles)


def build_random_ansatz(seed, n_qubits, depth):
    """Layers of random-axis rotations, each followed by a CNOT ring.

    Layer ``d`` puts a rotation with parameter index ``d * n_qubits + q`` on
    every qubit ``q``, then CNOTs ``i -> (i + 1) % n_qubits`` for all ``i``.
    """
    if n_qubits < 2 or n_qubits > qsim.MAX_QUBITS:
        raise ConfigurationError(f"ansatz needs 2..{qsim.MAX_QUBITS} qubits, got {n_qubits}")
    if depth < 1:
        raise ConfigurationError(f"depth must be positive, got {depth}")
    rng = np.random.default_rng(seed)
    ops = []
    for layer in range(depth):
        kinds = rng.integers(0, len(qsim.ROTATIONS), size=n_qubits)
        for q in range(n_qubits):
            ops.append(GateTemplate(qsim.ROTATIONS[kinds[q]], q, param_index=layer * n_qubits + q))
        for q in range(n_qubits):
            ops.append(GateTemplate("CNOT", (q + 1) % n_qubits, control=q))
    return CircuitSpec(n_qubits, tuple(ops), depth * n_qubits, seed=int(seed), depth=depth)


# near-identity start; wide ranges give almost orthogonal filter outputs
ANGLE_INIT_RANGE = np.pi / 4


def random_angles(rng, n_params, scale=ANGLE_INIT_RANGE):
    return FilterParams(rng.uniform(-scale, scale, size=n_params))


# -- embedding and execution -------------------------------------------------


def _check_patches(patches, n_qubits):
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim == 1:
        patches = patches[None, :]
    if patches.ndim != 2 or patches.shape[1] != n_qubits:
        raise ShapeError(f"patch of shape {patches.shape[1:]} for a {n_qubits}-qubit filter")
    return patches


def embed_batch(patches):
    """Angle-encode rows of ``patches`` (shape (batch, k)) with Ry(pi * x)."""
    patches = np.asarray(patches, dtype=np.float64)
    batch, n = patches.shape
    amps = qsim.zero_batch(batch, n)
    for q in range(n):
        amps = qsim.apply_rotation(amps, n, q, "RY", np.pi * patches[:, q])
    return amps


def embed_patch(patch):
    patch = np.asarray(patch, dtype=np.float64).reshape(-1)
    if patch.size == 0:
        raise ShapeError("empty patch")
    if np.any(patch < 0.0) or np.any(patch > 1.0):
        raise DomainError("pixel values must lie in [0, 1]")
    return qsim.StateVector(patch.size, embed_batch(patch[None, :])[0])


def run_filter_batch(spec, angles, patches, shift=None, embedded=None):
    """Output amplitudes of the filter on every patch row.

    ``shift=(j, delta)`` evaluates the circuit with angle ``j`` moved by
    ``delta``; ``embedded`` reuses precomputed :func:`embed_batch` output.
    """
    angles = np.asarray(angles, dtype=np.float64)
    if angles.size != spec.n_params:
        raise ShapeError(f"{angles.size} angles for a circuit with {spec.n_params} parameters")
    if shift is not None:
        j, delta = shift
        if not 0 <= j < spec.n_params:
            raise IndexError(f"parameter index {j} out of range for {spec.n_params} parameters")
        angles = angles.copy()
        angles[j] += delta
    amps = embed_batch(_check_patches(patches, spec.n_qubits)) if embedded is None else embedded
    n = spec.n_qubits
    for op in spec.ops:
        if op.is_rotation:
            amps = qsim.apply_rotation(amps, n, op.target, op.kind, angles[op.param_index])
        else:
            amps = qsim.apply_cnot(amps, n, op.control, op.target)
    return amps


def run_filter(spec, params, patch):
    """Run one filter on one patch; returns ``(state, <Z_q> for each qubit)``."""
    patch = _check_patches(patch, spec.n_qubits)
    if patch.shape[0] != 1:
        raise ShapeError("run_filter takes a single patch")
    embed_patch(patch[0])  # range validation
    amps = run_filter_batch(spec, params.angles, patch)
    state = qsim.StateVector(spec.n_qubits, amps[0])
    features = np.clip(qsim.expz_batch(amps, spec.n_qubits)[0], -1.0, 1.0)
    return state, features


# -- text serialization --------------------------------------------------------


def circuit_to_text(spec):
    header = f"circuit n_qubits={spec.n_qubits} n_params={spec.n_params}"
    if spec.depth is not None:
        header += f" depth={spec.depth}"
    if spec.seed is not None:
        header += f" seed={spec.seed}"
    lines = [header]
    for op in spec.ops:
        if op.is_rotation:
            lines.append(f"{op.kind} q{op.target} p{op.param_index}")
        else:
            lines.append(f"CNOT c{op.control} t{op.target}")
    return "\n".join(lines) + "\n"


def circuit_from_text(text):
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("circuit"):
        raise ValueError("missing 'circuit' header line")
    fields = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    ops = []
    for ln in lines[1:]:
        kind, a, b = ln.split()
        if kind == "CNOT":
            ops.append(GateTemplate("CNOT", int(b[1:]), control=int(a[1:])))
        else:
            ops.append(GateTemplate(kind, int(a[1:]), param_index=int(b[1:])))
    return CircuitSpec(
        int(fields["n_qubits"]),
        tuple(ops),
        int(fields["n_params"]),
        seed=int(fields["seed"]) if "seed" in fields else None,
        depth=int(fields["depth"]) if "depth" in fields else None,
    )

"""
Statevectors, rotations and fidelity
====================================

Single-qubit rotations, a CNOT, Z expectations and the pure-state
fidelity |<a|b>|^2 on the dense simulator.
"""
import numpy as np

from fvtrain import qsim

# %% Rx(pi) sends |0> to -i|1>; <Z> flips sign
psi = qsim.apply_gate(qsim.zero_state(1), qsim.rx(0, np.pi))
print("Rx(pi)|0> =", np.round(psi.amplitudes, 12), " <Z> =", qsim.expectation_z(psi, 0))

# %% a Bell pair: Ry(pi/2) on qubit 0, then CNOT 0 -> 1
bell = qsim.apply_circuit(qsim.zero_state(2), [qsim.ry(0, np.pi / 2), qsim.cnot(0, 1)])
print("Bell amplitudes:", np.round(bell.amplitudes.real, 6))
print("<Z0>, <Z1> =", qsim.expectation_z(bell, 0), qsim.expectation_z(bell, 1))

# %% fidelity: 1 for identical states, 0 for orthogonal ones, blind to global phase
zero, one = qsim.basis_state("0"), qsim.basis_state("1")
plus = qsim.apply_gate(zero, qsim.ry(0, np.pi / 2))
print("F(0,0) =", qsim.fidelity(zero, zero), " F(0,1) =", qsim.fidelity(zero, one), " F(0,+) =", qsim.fidelity(zero, plus))
phased = qsim.StateVector(2, np.exp(0.7j) * bell.amplitudes)
print("F(e^{i phi} bell, bell) =", qsim.fidelity(phased, bell))

# %% sweeping an Ry angle traces cos^2(theta / 2)
for theta in np.linspace(0, np.pi, 5):
    f = qsim.fidelity(zero, qsim.apply_gate(zero, qsim.ry(0, theta)))
    print(f"theta={theta:.3f}  F={f:.4f}  cos^2={np.cos(theta / 2) ** 2:.4f}")

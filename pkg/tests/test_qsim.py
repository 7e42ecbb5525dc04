import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fvtrain import qsim
from fvtrain.errors import ConfigurationError, DomainError, ShapeError

import dense_oracle
from conftest import random_state

angles = st.floats(-4 * np.pi, 4 * np.pi, allow_nan=False)
kinds = st.sampled_from(qsim.ROTATIONS)


def test_zero_state():
    np.testing.assert_array_equal(qsim.zero_state(1).amplitudes, [1, 0])
    np.testing.assert_array_equal(qsim.zero_state(2).amplitudes, [1, 0, 0, 0])
    assert qsim.zero_state(4).norm() == 1.0


@pytest.mark.parametrize("n", [0, 13, -1])
def test_zero_state_range(n):
    with pytest.raises(ConfigurationError):
        qsim.zero_state(n)


def test_rx_pi_flips_to_minus_i():
    out = qsim.apply_gate(qsim.zero_state(1), qsim.rx(0, np.pi))
    np.testing.assert_allclose(out.amplitudes, [0, -1j], atol=1e-15)
    assert qsim.expectation_z(out, 0) == pytest.approx(-1.0, abs=1e-15)


def test_cnot_truth_table():
    out = qsim.apply_gate(qsim.basis_state("10"), qsim.cnot(0, 1))
    np.testing.assert_array_equal(out.amplitudes, qsim.basis_state("11").amplitudes)
    for bits, expected in [("00", "00"), ("01", "01"), ("11", "10")]:
        out = qsim.apply_gate(qsim.basis_state(bits), qsim.cnot(0, 1))
        np.testing.assert_array_equal(out.amplitudes, qsim.basis_state(expected).amplitudes)
    # reversed roles
    out = qsim.apply_gate(qsim.basis_state("01"), qsim.cnot(1, 0))
    np.testing.assert_array_equal(out.amplitudes, qsim.basis_state("11").amplitudes)


def test_ry_half_pi():
    out = qsim.apply_gate(qsim.zero_state(1), qsim.ry(0, np.pi / 2))
    np.testing.assert_allclose(out.amplitudes, [np.cos(np.pi / 4), np.sin(np.pi / 4)], atol=1e-15)
    assert abs(qsim.expectation_z(out, 0)) < 1e-10


def test_expectation_z_basis():
    assert qsim.expectation_z(qsim.basis_state("0"), 0) == 1.0
    assert qsim.expectation_z(qsim.basis_state("1"), 0) == -1.0
    s = qsim.basis_state("0110")
    assert [qsim.expectation_z(s, q) for q in range(4)] == [1, -1, -1, 1]


def test_fidelity_examples():
    s0, s1 = qsim.basis_state("0"), qsim.basis_state("1")
    plus = qsim.apply_gate(s0, qsim.ry(0, np.pi / 2))
    assert qsim.fidelity(s0, s0) == 1.0
    assert qsim.fidelity(s0, s1) == 0.0
    assert qsim.fidelity(s0, plus) == pytest.approx(0.5, abs=1e-15)


def test_errors():
    s = qsim.zero_state(2)
    with pytest.raises(IndexError):
        qsim.apply_gate(s, qsim.rx(2, 0.1))
    with pytest.raises(IndexError):
        qsim.apply_gate(s, qsim.cnot(0, 5))
    with pytest.raises(IndexError):
        qsim.expectation_z(s, 3)
    with pytest.raises(ShapeError):
        qsim.fidelity(s, qsim.zero_state(3))
    with pytest.raises(ConfigurationError):
        qsim.cnot(1, 1)
    with pytest.raises(ConfigurationError):
        qsim.Gate("H", 0)
    with pytest.raises(DomainError):
        qsim.StateVector(1, [1.0, 1.0])
    with pytest.raises(ShapeError):
        qsim.StateVector(2, [1.0, 0.0])


def test_states_are_immutable():
    s = qsim.zero_state(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 3), kind=kinds, a=angles, b=angles, seed=st.integers(0, 2**32 - 1))
def test_rotation_composition(n, kind, a, b, seed):
    psi = random_state(np.random.default_rng(seed), n)
    q = seed % n
    two = qsim.apply_gate(qsim.apply_gate(psi, qsim.Gate(kind, q, angle=a)), qsim.Gate(kind, q, angle=b))
    one = qsim.apply_gate(psi, qsim.Gate(kind, q, angle=a + b))
    np.testing.assert_allclose(two.amplitudes, one.amplitudes, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 3), seed=st.integers(0, 2**32 - 1), a=angles, kind=kinds)
def test_dense_matrix_agreement(n, seed, a, kind):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    q = int(rng.integers(n))
    out = qsim.apply_gate(psi, qsim.Gate(kind, q, angle=a))
    np.testing.assert_allclose(out.amplitudes, dense_oracle.gate_matrix(kind, n, q, angle=a) @ psi.amplitudes, atol=1e-12)
    c, t = rng.choice(n, size=2, replace=False)
    out = qsim.apply_gate(psi, qsim.cnot(int(c), int(t)))
    np.testing.assert_allclose(
        out.amplitudes, dense_oracle.gate_matrix("CNOT", n, int(t), control=int(c)) @ psi.amplitudes, atol=1e-12
    )
    assert abs(out.norm() - 1) < 1e-10


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1), phi=angles)
def test_fidelity_properties(n, seed, phi):
    rng = np.random.default_rng(seed)
    a, b = random_state(rng, n), random_state(rng, n)
    assert qsim.fidelity(a, b) == qsim.fidelity(b, a)
    assert 0.0 <= qsim.fidelity(a, b) <= 1.0
    rotated = qsim.StateVector(n, np.exp(1j * phi) * a.amplitudes)
    assert abs(qsim.fidelity(rotated, a) - 1.0) < 1e-12
    assert abs(qsim.fidelity(a, a) - 1.0) < 1e-12


def test_batched_kernels_match_single_state(rng):
    n = 3
    states = [random_state(rng, n) for _ in range(5)]
    amps = np.stack([s.amplitudes for s in states])
    per_row = rng.uniform(-3, 3, size=5)
    out = qsim.apply_rotation(amps, n, 1, "RX", per_row)
    for row, s, a in zip(out, states, per_row):
        np.testing.assert_allclose(row, qsim.apply_gate(s, qsim.rx(1, a)).amplitudes, atol=1e-15)
    z = qsim.expz_batch(amps, n)
    for row, s in zip(z, states):
        np.testing.assert_allclose(row, [qsim.expectation_z(s, q) for q in range(n)], atol=1e-15)

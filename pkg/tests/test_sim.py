"""Statevector simulator tests against explicit-matrix oracles."""

import numpy as np
import pytest

from hqcnn.sim import (
    Gate,
    StateVector,
    apply_gate,
    excitation_probabilities,
    init_zero,
    joint_probabilities,
)

import oracles


def random_gate(n, rng):
    kind = rng.choice(["RX", "RY", "RZ", "U3", "CNOT", "CRX", "CRZ"])
    n_wires = 2 if kind in ("CNOT", "CRX", "CRZ") else 1
    wires = tuple(rng.choice(n, size=n_wires, replace=False).tolist())
    n_angles = {"U3": 3, "CNOT": 0}.get(kind, 1)
    angles = tuple(rng.uniform(-2 * np.pi, 2 * np.pi, size=n_angles).tolist())
    return Gate(kind, wires, angles)


def inverse_gate(gate):
    if gate.kind == "CNOT":
        return gate
    if gate.kind == "U3":
        t, p, l = gate.angles
        return Gate("U3", gate.wires, (-t, -l, -p))
    return Gate(gate.kind, gate.wires, tuple(-a for a in gate.angles))


# ---------------------------------------------------------------------------
# init_zero
# ---------------------------------------------------------------------------

def test_init_zero_one_qubit():
    assert np.array_equal(init_zero(1).amplitudes, [1, 0])


def test_init_zero_three_qubits():
    amps = init_zero(3).amplitudes
    assert amps.shape == (8,)
    assert amps[0] == 1 and np.all(amps[1:] == 0)


def test_init_zero_eight_qubits_norm():
    amps = init_zero(8).amplitudes
    assert amps.shape == (256,)
    assert abs(np.linalg.norm(amps) - 1) < 1e-15


@pytest.mark.parametrize("n", [0, -1, 11])
def test_init_zero_rejects_bad_counts(n):
    with pytest.raises(ValueError):
        init_zero(n)


# ---------------------------------------------------------------------------
# apply_gate basics
# ---------------------------------------------------------------------------

def test_ry_pi_flips_ground_state():
    out = apply_gate(init_zero(1), Gate("RY", (0,), (np.pi,)))
    np.testing.assert_allclose(out.amplitudes, [0, 1], atol=1e-15)


def test_cnot_on_10():
    state = apply_gate(init_zero(2), Gate("RY", (0,), (np.pi,)))  # |10>
    out = apply_gate(state, Gate("CNOT", (0, 1)))
    np.testing.assert_allclose(np.abs(out.amplitudes), [0, 0, 0, 1], atol=1e-15)


@pytest.mark.parametrize("phi", [0.0, 0.3, np.pi, -2.5])
def test_crz_with_unset_control_is_identity(phi):
    out = apply_gate(init_zero(2), Gate("CRZ", (0, 1), (phi,)))
    np.testing.assert_allclose(out.amplitudes, init_zero(2).amplitudes, atol=1e-15)


@pytest.mark.parametrize("kind,n_wires,n_angles", [
    ("RX", 1, 1), ("RY", 1, 1), ("RZ", 1, 1), ("U3", 1, 3),
    ("CNOT", 2, 0), ("CRX", 2, 1), ("CRZ", 2, 1),
])
def test_every_gate_matches_matrix_oracle(kind, n_wires, n_angles):
    rng = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(10):
        n = int(rng.integers(n_wires, 6))
        wires = tuple(rng.choice(n, size=n_wires, replace=False).tolist())
        angles = tuple(rng.uniform(-2 * np.pi, 2 * np.pi, size=n_angles).tolist())
        psi = oracles.random_state(n, rng)
        got = apply_gate(StateVector(n, psi), Gate(kind, wires, angles)).amplitudes
        expected = oracles.gate_full(kind, wires, angles, n) @ psi
        np.testing.assert_allclose(got, expected, atol=1e-12)


def test_apply_gate_rejects_out_of_range_wire():
    with pytest.raises(ValueError):
        apply_gate(init_zero(2), Gate("RX", (2,), (0.1,)))


def test_gate_rejects_duplicate_wires():
    with pytest.raises(ValueError):
        Gate("CNOT", (1, 1))


def test_gate_rejects_non_finite_angle():
    with pytest.raises(ValueError):
        Gate("RY", (0,), (np.nan,))


def test_gate_rejects_unknown_kind():
    with pytest.raises(ValueError):
        Gate("HADAMARD", (0,))


# ---------------------------------------------------------------------------
# probabilities
# ---------------------------------------------------------------------------

def test_joint_probabilities_ground_state():
    np.testing.assert_array_equal(joint_probabilities(init_zero(2), [0, 1]), [1, 0, 0, 0])


def test_joint_probabilities_bell_state():
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    probs = joint_probabilities(StateVector(2, bell), [0, 1])
    np.testing.assert_allclose(probs, [0.5, 0, 0, 0.5], atol=1e-15)


def test_joint_probabilities_matches_enumeration():
    rng = np.random.default_rng(11)
    psi = oracles.random_state(4, rng)
    state = StateVector(4, psi)
    for wires in ([1, 3], [3, 1], [0, 2, 3], [2]):
        got = joint_probabilities(state, wires)
        expected = oracles.joint_probs_enumerate(psi, wires, 4)
        np.testing.assert_allclose(got, expected, atol=1e-12)
        assert abs(got.sum() - 1) < 1e-10


def test_joint_probabilities_rejects_duplicates_and_bad_wires():
    state = init_zero(3)
    with pytest.raises(ValueError):
        joint_probabilities(state, [0, 0])
    with pytest.raises(ValueError):
        joint_probabilities(state, [0, 3])


def test_joint_probabilities_limits_wire_count():
    state = init_zero(8)
    with pytest.raises(ValueError):
        joint_probabilities(state, [0, 1, 2, 3, 4])


def test_excitations_ground_state():
    np.testing.assert_array_equal(
        excitation_probabilities(init_zero(4), [0, 1, 2, 3]), [0, 0, 0, 0]
    )


def test_excitation_after_half_ry():
    out = apply_gate(init_zero(2), Gate("RY", (1,), (np.pi / 2,)))
    probs = excitation_probabilities(out, [1, 0])
    np.testing.assert_allclose(probs, [0.5, 0.0], atol=1e-15)


def test_excitations_match_partial_trace_oracle():
    # entangled 6-qubit state built from a random circuit
    rng = np.random.default_rng(23)
    state = init_zero(6)
    for _ in range(30):
        state = apply_gate(state, random_gate(6, rng))
    probs = excitation_probabilities(state, list(range(6)))
    for w in range(6):
        rho = oracles.reduced_density_matrix(state.amplitudes, w, 6)
        assert abs(probs[w] - rho[1, 1].real) < 1e-12
        assert abs(rho[0, 0].real + rho[1, 1].real - 1) < 1e-12


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

def test_norm_preserved_over_random_sequences():
    rng = np.random.default_rng(7)
    for trial in range(5):
        n = int(rng.integers(2, 9))
        state = StateVector(n, oracles.random_state(n, rng))
        for _ in range(40):
            state = apply_gate(state, random_gate(n, rng))
        assert abs(np.sum(state.probabilities()) - 1) < 1e-12


def test_gate_then_inverse_restores_state():
    rng = np.random.default_rng(13)
    for _ in range(30):
        n = int(rng.integers(2, 7))
        psi = oracles.random_state(n, rng)
        gate = random_gate(n, rng)
        state = apply_gate(apply_gate(StateVector(n, psi), gate), inverse_gate(gate))
        np.testing.assert_allclose(state.amplitudes, psi, atol=1e-10)


def test_marginals_invariant_under_disjoint_gates():
    # gates on wire set A leave excitations of disjoint set B untouched,
    # which is what licenses reading discarded wires at circuit end
    rng = np.random.default_rng(37)
    wires_a, wires_b = (0, 2, 5), (1, 3, 4)
    state = StateVector(6, oracles.random_state(6, rng))
    before = excitation_probabilities(state, wires_b)
    for _ in range(25):
        kind = rng.choice(["RX", "RY", "RZ", "U3", "CNOT", "CRX", "CRZ"])
        n_wires = 2 if kind in ("CNOT", "CRX", "CRZ") else 1
        wires = tuple(rng.choice(wires_a, size=n_wires, replace=False).tolist())
        n_angles = {"U3": 3, "CNOT": 0}.get(kind, 1)
        angles = tuple(rng.uniform(-np.pi, np.pi, size=n_angles).tolist())
        state = apply_gate(state, Gate(kind, wires, angles))
    after = excitation_probabilities(state, wires_b)
    np.testing.assert_allclose(after, before, atol=1e-12)


def test_joint_over_all_wires_equals_probability_vector():
    rng = np.random.default_rng(41)
    for n in (2, 3, 4):
        psi = oracles.random_state(n, rng)
        state = StateVector(n, psi)
        probs = joint_probabilities(state, list(range(n)))
        np.testing.assert_array_equal(probs, state.probabilities())


def test_statevector_rejects_unnormalized_and_wrong_length():
    with pytest.raises(ValueError):
        StateVector(2, np.array([1.0, 1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        StateVector(2, np.array([1.0, 0.0]))


def test_statevector_amplitudes_are_frozen():
    state = init_zero(3)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 0.5

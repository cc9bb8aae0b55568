"""Backbone tests: templates vs matrix oracles, layouts, forward pass."""

import numpy as np
import pytest

from hqcnn.qcnn import (
    ConvParams,
    PoolParams,
    QcnnParams,
    build_layout,
    compile_program,
    discarded_marginals_after_pool1,
    forward,
    apply_conv_unitary,
    apply_pool_unitary,
    N_PARAMS,
)
from hqcnn.sim import StateVector, apply_gate, Gate, excitation_probabilities, init_zero

import oracles


def random_qcnn_params(rng):
    return QcnnParams.random(rng)


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------

def test_parameter_count_is_94():
    assert N_PARAMS == 94
    rng = np.random.default_rng(0)
    assert QcnnParams.random(rng).to_flat().shape == (94,)


def test_flat_roundtrip_and_locate():
    rng = np.random.default_rng(1)
    params = QcnnParams.random(rng)
    flat = params.to_flat()
    back = QcnnParams.from_flat(flat)
    assert np.array_equal(back.conv, params.conv)
    assert np.array_equal(back.pool, params.pool)
    assert QcnnParams.locate(0) == ("conv", 0, 0)
    assert QcnnParams.locate(15) == ("conv", 1, 0)
    assert QcnnParams.locate(89) == ("conv", 5, 14)
    assert QcnnParams.locate(90) == ("pool", 0, 0)
    assert QcnnParams.locate(93) == ("pool", 1, 1)
    with pytest.raises(ValueError):
        QcnnParams.locate(94)


def test_param_validation():
    with pytest.raises(ValueError):
        ConvParams(tuple(range(14)))
    with pytest.raises(ValueError):
        ConvParams((np.nan,) * 15)
    with pytest.raises(ValueError):
        PoolParams((0.0,))
    with pytest.raises(ValueError):
        QcnnParams(np.zeros((6, 14)), np.zeros((2, 2)))


# ---------------------------------------------------------------------------
# convolution template
# ---------------------------------------------------------------------------

def test_conv_zero_params_matches_matrix_oracle():
    # All angles zero leaves the three alternating CNOTs, which compose to a
    # wire swap; the oracle matrix is the truth the template must match.
    mat = oracles.conv_matrix([0.0] * 15)
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    np.testing.assert_allclose(mat, swap, atol=1e-15)
    rng = np.random.default_rng(2)
    psi = oracles.random_state(3, rng)
    out = apply_conv_unitary(StateVector(3, psi), (0, 2), ConvParams((0.0,) * 15))
    expected = oracles.embed_full(mat, (0, 2), 3) @ psi
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-10)


def test_conv_template_is_unitary():
    rng = np.random.default_rng(3)
    for _ in range(5):
        mat = oracles.conv_matrix(rng.uniform(-np.pi, np.pi, 15))
        np.testing.assert_allclose(mat.conj().T @ mat, np.eye(4), atol=1e-10)


def test_conv_matches_oracle_on_random_states():
    rng = np.random.default_rng(4)
    for _ in range(8):
        n = int(rng.integers(2, 7))
        pair = tuple(rng.choice(n, size=2, replace=False).tolist())
        angles = rng.uniform(-np.pi, np.pi, 15)
        psi = oracles.random_state(n, rng)
        out = apply_conv_unitary(StateVector(n, psi), pair, ConvParams(tuple(angles)))
        expected = oracles.embed_full(oracles.conv_matrix(angles), pair, n) @ psi
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)


def test_conv_acts_locally():
    rng = np.random.default_rng(5)
    psi = oracles.random_state(8, rng)
    state = StateVector(8, psi)
    before = excitation_probabilities(state, range(2, 8))
    out = apply_conv_unitary(state, (0, 1), ConvParams(tuple(rng.uniform(-np.pi, np.pi, 15))))
    after = excitation_probabilities(out, range(2, 8))
    np.testing.assert_allclose(after, before, atol=1e-12)


def test_conv_rejects_bad_wires():
    state = init_zero(4)
    params = ConvParams((0.1,) * 15)
    with pytest.raises(ValueError):
        apply_conv_unitary(state, (1, 1), params)
    with pytest.raises(ValueError):
        apply_conv_unitary(state, (0, 4), params)


# ---------------------------------------------------------------------------
# pooling template
# ---------------------------------------------------------------------------

def test_pool_control_zero_is_identity():
    rng = np.random.default_rng(6)
    for _ in range(5):
        params = PoolParams(tuple(rng.uniform(-np.pi, np.pi, 2)))
        out = apply_pool_unitary(init_zero(2), 0, 1, params)
        np.testing.assert_allclose(out.amplitudes, init_zero(2).amplitudes, atol=1e-12)


def test_pool_crx_pi_flips_target_when_control_set():
    # |10> with phi1=0, phi2=pi: CRX(pi) acts as X up to phase
    state = apply_gate(init_zero(2), Gate("RY", (0,), (np.pi,)))
    out = apply_pool_unitary(state, 0, 1, PoolParams((0.0, np.pi)))
    np.testing.assert_allclose(np.abs(out.amplitudes) ** 2, [0, 0, 0, 1], atol=1e-12)


def test_pool_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(8):
        n = int(rng.integers(2, 7))
        control, target = rng.choice(n, size=2, replace=False).tolist()
        angles = rng.uniform(-np.pi, np.pi, 2)
        psi = oracles.random_state(n, rng)
        out = apply_pool_unitary(StateVector(n, psi), control, target, PoolParams(tuple(angles)))
        expected = oracles.embed_full(oracles.pool_matrix(angles), (control, target), n) @ psi
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)


# ---------------------------------------------------------------------------
# layouts
# ---------------------------------------------------------------------------

def test_default_layout_structure():
    layout = build_layout()
    assert layout.conv_pairs[0] == ((0, 1), (2, 3), (4, 5), (6, 7))
    assert layout.conv_pairs[1] == ((1, 2), (3, 4), (5, 6), (7, 0))  # brick shift
    assert layout.pool_pairs[0] == ((0, 1), (2, 3), (4, 5), (6, 7))
    assert layout.discarded_wires == (1, 3, 5, 7)
    assert layout.retained_wires == (0, 4)


def test_layout_keep_high():
    layout = build_layout(pool_keep="high")
    assert layout.pool_pairs[0] == ((1, 0), (3, 2), (5, 4), (7, 6))
    assert layout.discarded_wires == (0, 2, 4, 6)
    assert layout.retained_wires == (3, 7)


@pytest.mark.parametrize("retained", [(7, 1), (3, 5), (1, 7), (0, 4)])
def test_layout_retained_wires_are_expressible(retained):
    layout = build_layout(retained=retained)
    assert layout.retained_wires == retained
    survivors = {k for k, _ in layout.pool_pairs[1]}
    assert set(retained) == survivors


def test_layout_rejects_same_pool_pair_retention():
    with pytest.raises(ValueError):
        build_layout(retained=(0, 1))


def test_layout_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_layout(pool_keep="middle")
    with pytest.raises(ValueError):
        build_layout(pairing="ladder")
    with pytest.raises(ValueError):
        build_layout(retained=(0, 0))
    with pytest.raises(ValueError):
        build_layout(retained=(0, 8))


def test_linear_pairing():
    layout = build_layout(pairing="linear")
    assert layout.conv_pairs[0] == layout.conv_pairs[1]


# ---------------------------------------------------------------------------
# forward
# ---------------------------------------------------------------------------

def test_forward_identity_params_on_ground_state():
    feats = forward(init_zero(8), QcnnParams.zeros(), build_layout())
    np.testing.assert_allclose(feats.retained, [1, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(feats.discarded, [0, 0, 0, 0], atol=1e-12)


def test_forward_retained_sums_to_one():
    rng = np.random.default_rng(8)
    layout = build_layout()
    for _ in range(5):
        state = StateVector(8, oracles.random_state(8, rng))
        feats = forward(state, QcnnParams.random(rng), layout)
        assert abs(feats.retained.sum() - 1) < 1e-10
        assert np.all(feats.retained >= 0) and np.all(feats.discarded >= 0)
        assert np.all(feats.discarded <= 1)


@pytest.mark.parametrize("layout_kw", [
    {},
    {"retained": (7, 1)},
    {"retained": (3, 5), "pairing": "linear"},
    {"pool_keep": "high"},
])
def test_forward_matches_full_matrix_oracle(layout_kw):
    rng = np.random.default_rng(9)
    layout = build_layout(**layout_kw)
    for _ in range(3):
        psi = oracles.random_state(8, rng)
        params = QcnnParams.random(rng)
        feats = forward(StateVector(8, psi), params, layout)
        exp_ret, exp_disc = oracles.qcnn_forward_full_matrix(psi, layout, params)
        np.testing.assert_allclose(feats.retained, exp_ret, atol=1e-10)
        np.testing.assert_allclose(feats.discarded, exp_disc, atol=1e-10)


def test_forward_is_deterministic():
    rng = np.random.default_rng(10)
    layout = build_layout()
    state = StateVector(8, oracles.random_state(8, rng))
    params = QcnnParams.random(rng)
    a = forward(state, params, layout)
    b = forward(state, params, layout)
    assert np.array_equal(a.retained, b.retained)
    assert np.array_equal(a.discarded, b.discarded)


def test_forward_rejects_wrong_register():
    with pytest.raises(ValueError):
        forward(init_zero(4), QcnnParams.zeros(), build_layout())


def test_weight_sharing_across_pairs():
    layout = build_layout()
    program = compile_program(layout)
    # conv layer 0 parameter 0 must feed one gate instance per pair of that layer
    hits = np.sum(program.param_id == 0)
    assert hits == len(layout.conv_pairs[0]) == 4
    # and perturbing it changes the forward output
    rng = np.random.default_rng(11)
    state = StateVector(8, oracles.random_state(8, rng))
    params = QcnnParams.random(rng)
    base = forward(state, params, layout).as_vector()
    bumped = params.copy()
    bumped.conv[0, 0] += 0.37
    moved = forward(state, bumped, layout).as_vector()
    assert np.abs(moved - base).max() > 1e-6


def test_discarded_readout_equivalence():
    # marginals of pooling-1 targets: right after pooling 1 vs after QC6
    rng = np.random.default_rng(12)
    layout = build_layout()
    for _ in range(10):
        state = StateVector(8, oracles.random_state(8, rng))
        params = QcnnParams.random(rng)
        mid = discarded_marginals_after_pool1(state, params, layout)
        end = forward(state, params, layout).discarded
        np.testing.assert_allclose(mid, end, atol=1e-12)

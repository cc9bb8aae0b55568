"""Encoder tests: amplitude/angle embeddings and the selection rule."""

import numpy as np
import pytest

from hqcnn.encoding import FeatureVector, amplitude_embed, angle_embed, select_encoder
from hqcnn.sim import excitation_probabilities, joint_probabilities

import oracles


def test_amplitude_one_hot_is_basis_state():
    x = np.zeros(256)
    x[0] = 1.0
    state = amplitude_embed(FeatureVector(x))
    assert state.amplitudes[0] == 1.0
    assert np.all(state.amplitudes[1:] == 0)


def test_amplitude_uniform_vector():
    state = amplitude_embed(FeatureVector(np.ones(256)))
    np.testing.assert_allclose(state.amplitudes, np.full(256, 1 / 16), atol=1e-15)


def test_amplitude_matches_compensated_norm():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1, size=256)
    state = amplitude_embed(FeatureVector(x))
    expected = x / np.sqrt(oracles.kahan_norm_sq(x))
    np.testing.assert_allclose(state.amplitudes.real, expected, atol=1e-14)
    assert abs(np.sum(state.probabilities()) - 1) < 1e-12


def test_amplitude_rejects_zero_vector():
    with pytest.raises(ValueError):
        amplitude_embed(FeatureVector(np.zeros(256)))


def test_amplitude_rejects_wrong_dim():
    with pytest.raises(ValueError):
        amplitude_embed(FeatureVector(np.full(8, 0.5)))


def test_amplitude_scale_invariance():
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 1.0 / 3.0, size=256)
    base = amplitude_embed(FeatureVector(x)).amplitudes
    for c in (0.2, 0.8, 1.0, 3.0):
        scaled = amplitude_embed(FeatureVector(c * x)).amplitudes
        np.testing.assert_allclose(scaled, base, atol=1e-12)


def test_angle_half_inputs_give_uniform_probabilities():
    state = angle_embed(FeatureVector(np.full(8, 0.5)))
    np.testing.assert_allclose(state.probabilities(), np.full(256, 1 / 256), atol=1e-15)


def test_angle_zero_inputs_stay_in_ground_state():
    state = angle_embed(FeatureVector(np.zeros(8)))
    probs = state.probabilities()
    assert abs(probs[0] - 1) < 1e-15  # RZ(-pi) only contributes phase


def test_angle_per_qubit_excitation_closed_form():
    rng = np.random.default_rng(9)
    x = rng.uniform(0, 1, size=8)
    state = angle_embed(FeatureVector(x))
    probs = excitation_probabilities(state, list(range(8)))
    np.testing.assert_allclose(probs, np.sin(np.pi * x / 2) ** 2, atol=1e-12)


def test_angle_state_is_unentangled():
    rng = np.random.default_rng(17)
    x = rng.uniform(0, 1, size=8)
    state = angle_embed(FeatureVector(x))
    singles = excitation_probabilities(state, list(range(8)))
    for a, b in [(0, 1), (2, 7), (4, 5), (3, 6)]:
        joint = joint_probabilities(state, [a, b])
        pa, pb = singles[a], singles[b]
        expected = np.array([(1 - pa) * (1 - pb), (1 - pa) * pb, pa * (1 - pb), pa * pb])
        np.testing.assert_allclose(joint, expected, atol=1e-10)


def test_encoders_are_deterministic():
    rng = np.random.default_rng(21)
    x8 = rng.uniform(0, 1, size=8)
    x256 = rng.uniform(0, 1, size=256)
    a1 = angle_embed(FeatureVector(x8)).amplitudes
    a2 = angle_embed(FeatureVector(x8)).amplitudes
    assert np.array_equal(a1, a2)
    b1 = amplitude_embed(FeatureVector(x256)).amplitudes
    b2 = amplitude_embed(FeatureVector(x256)).amplitudes
    assert np.array_equal(b1, b2)


def test_angle_rejects_wrong_dim():
    with pytest.raises(ValueError):
        angle_embed(FeatureVector(np.full(256, 0.5)))


def test_feature_vector_rejects_out_of_range_and_bad_dims():
    with pytest.raises(ValueError):
        FeatureVector(np.array([0.0, 0.5, 1.2] + [0.0] * 5))
    with pytest.raises(ValueError):
        FeatureVector(np.full(8, -0.01))
    with pytest.raises(ValueError):
        FeatureVector(np.full(13, 0.5))
    with pytest.raises(ValueError):
        FeatureVector(np.array([np.inf] + [0.0] * 7))


def test_select_encoder():
    assert select_encoder(256) == "amplitude"
    assert select_encoder(8) == "angle"
    with pytest.raises(ValueError):
        select_encoder(13)

"""Classical-to-quantum feature encoders.

Two encoders, both producing 8-qubit states:
  * amplitude: a 256-vector becomes the L2-normalized amplitude vector;
  * angle: 8 values x in [0,1] become per-qubit RZ(pi*(2x-1)) RY(pi*x) |0>.

The selection rule is dimension-based: amplitude for more than 8 features,
angle otherwise. Only dims 8 and 256 are supported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim import StateVector

N_QUBITS = 8
SUPPORTED_DIMS = (8, 256)


@dataclass(frozen=True)
class FeatureVector:
    """Min-max normalized features in [0,1]; dim must be 8 or 256."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.shape[0] not in SUPPORTED_DIMS:
            raise ValueError(f"feature dim must be one of {SUPPORTED_DIMS}, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("features contain non-finite values")
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("features must lie in [0, 1] (min-max normalize first)")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def select_encoder(dim: int) -> str:
    """'amplitude' for dim > 8, 'angle' otherwise; only dims 8 and 256 exist."""
    if dim not in SUPPORTED_DIMS:
        raise ValueError(f"unsupported feature dim {dim}; expected one of {SUPPORTED_DIMS}")
    return "amplitude" if dim > 8 else "angle"


def amplitude_embed(features: FeatureVector) -> StateVector:
    """Load a 256-vector as the amplitudes of an 8-qubit state."""
    if features.dim != 256:
        raise ValueError(f"amplitude embedding needs 256 features, got {features.dim}")
    norm = float(np.linalg.norm(features.values))
    if norm == 0.0:
        raise ValueError("cannot amplitude-embed the all-zero vector")
    return StateVector(N_QUBITS, (features.values / norm).astype(np.complex128))


def angle_embed(features: FeatureVector) -> StateVector:
    """Product state from per-qubit angles theta = pi*x, phi = pi*(2x - 1)."""
    if features.dim != 8:
        raise ValueError(f"angle embedding needs 8 features, got {features.dim}")
    x = features.values
    theta = np.pi * x
    phi = np.pi * (2.0 * x - 1.0)
    # RZ(phi) RY(theta) |0> = [exp(-i phi/2) cos(theta/2), exp(i phi/2) sin(theta/2)]
    amps = np.ones(1, dtype=np.complex128)
    for i in range(N_QUBITS):
        qubit = np.array(
            [
                np.exp(-0.5j * phi[i]) * np.cos(0.5 * theta[i]),
                np.exp(0.5j * phi[i]) * np.sin(0.5 * theta[i]),
            ],
            dtype=np.complex128,
        )
        amps = np.kron(amps, qubit)  # qubit 0 ends up as the MSB
    return StateVector(N_QUBITS, amps)


def embed(features: FeatureVector) -> StateVector:
    """Encode with the encoder selected by the feature dimension."""
    if select_encoder(features.dim) == "amplitude":
        return amplitude_embed(features)
    return angle_embed(features)

"""Hybrid quantum-classical convolutional classifier with discarded-qubit recycling.

An 8-qubit statevector QCNN whose pooling layers drop wires without losing
their statistics: the discarded wires' excitation probabilities feed a
second classical head whose output is fused multiplicatively with the
retained head. Training is end to end (parameter-shift rule on the quantum
side, analytic backprop on the classical side) under one cross-entropy loss.
"""

__version__ = "0.1.0"

from .config import TrainConfig, parse_config
from .encoding import FeatureVector, amplitude_embed, angle_embed, select_encoder
from .heads import HeadParams, fuse, loss, predict, rescale
from .metrics import Metrics, compute_metrics
from .qcnn import (
    CircuitLayout,
    ConvParams,
    PoolParams,
    QcnnParams,
    QuantumFeatures,
    build_layout,
    forward,
)
from .sim import Gate, StateVector, apply_gate, excitation_probabilities, init_zero, joint_probabilities
from .trainer import TrainResult, run_eval, run_train

__all__ = [
    "TrainConfig", "parse_config",
    "FeatureVector", "amplitude_embed", "angle_embed", "select_encoder",
    "HeadParams", "fuse", "loss", "predict", "rescale",
    "Metrics", "compute_metrics",
    "CircuitLayout", "ConvParams", "PoolParams", "QcnnParams", "QuantumFeatures",
    "build_layout", "forward",
    "Gate", "StateVector", "apply_gate", "excitation_probabilities",
    "init_zero", "joint_probabilities",
    "TrainResult", "run_eval", "run_train",
    "__version__",
]

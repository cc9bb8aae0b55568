"""QCNN backbone: three blocks of (conv, conv, pool), (conv, conv, pool), (conv, conv).

Each convolution layer applies one weight-shared 15-parameter two-qubit
template to its wire pairs; each pooling layer applies a CRZ(phi1) CRX(phi2)
pair after which the target wire receives no further gates. The forward pass
reads out two 4-vectors: the joint distribution of the two retained wires and
the per-wire excitation probabilities of the four wires discarded by the
first pooling layer.

Discarded wires get no gates after pooling 1, so their marginals are the
same whether read at that point or at the end of the circuit; the forward
pass reads everything at the end and tests pin the equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .sim import StateVector, wire_stride

N_QUBITS = 8
N_CONV_LAYERS = 6
N_POOL_LAYERS = 2
CONV_SIZE = 15
POOL_SIZE = 2
N_PARAMS = N_CONV_LAYERS * CONV_SIZE + N_POOL_LAYERS * POOL_SIZE  # 94


@dataclass(frozen=True)
class ConvParams:
    """The 15 angles (theta1, phi2, lam3, theta4, phi5, lam6, theta7..theta9,
    theta10, phi11, lam12, theta13, phi14, lam15) of one convolution template."""

    angles: tuple

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != CONV_SIZE:
            raise ValueError(f"ConvParams needs {CONV_SIZE} angles, got {len(angles)}")
        if not all(np.isfinite(a) for a in angles):
            raise ValueError("non-finite convolution angle")
        object.__setattr__(self, "angles", angles)


@dataclass(frozen=True)
class PoolParams:
    """The (phi1, phi2) angles of one CRZ(phi1) CRX(phi2) pooling gate."""

    angles: tuple

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != POOL_SIZE:
            raise ValueError(f"PoolParams needs {POOL_SIZE} angles, got {len(angles)}")
        if not all(np.isfinite(a) for a in angles):
            raise ValueError("non-finite pooling angle")
        object.__setattr__(self, "angles", angles)


class QcnnParams:
    """All 94 trainable quantum angles: conv (6, 15) and pool (2, 2) arrays.

    Flat indexing: conv layer l slot s -> l*15 + s; pool layer l slot s ->
    90 + l*2 + s. Conv parameters are weight-shared across every pair of
    their layer.
    """

    def __init__(self, conv: np.ndarray, pool: np.ndarray):
        conv = np.array(conv, dtype=np.float64)
        pool = np.array(pool, dtype=np.float64)
        if conv.shape != (N_CONV_LAYERS, CONV_SIZE):
            raise ValueError(f"conv must have shape (6, 15), got {conv.shape}")
        if pool.shape != (N_POOL_LAYERS, POOL_SIZE):
            raise ValueError(f"pool must have shape (2, 2), got {pool.shape}")
        if not (np.all(np.isfinite(conv)) and np.all(np.isfinite(pool))):
            raise ValueError("non-finite quantum parameter")
        self.conv = conv
        self.pool = pool

    @classmethod
    def zeros(cls) -> "QcnnParams":
        return cls(np.zeros((N_CONV_LAYERS, CONV_SIZE)), np.zeros((N_POOL_LAYERS, POOL_SIZE)))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "QcnnParams":
        """Angles uniform in [-pi, pi]."""
        return cls(
            rng.uniform(-np.pi, np.pi, size=(N_CONV_LAYERS, CONV_SIZE)),
            rng.uniform(-np.pi, np.pi, size=(N_POOL_LAYERS, POOL_SIZE)),
        )

    @classmethod
    def from_flat(cls, flat) -> "QcnnParams":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (N_PARAMS,):
            raise ValueError(f"flat parameter vector must have length {N_PARAMS}")
        split = N_CONV_LAYERS * CONV_SIZE
        return cls(flat[:split].reshape(N_CONV_LAYERS, CONV_SIZE),
                   flat[split:].reshape(N_POOL_LAYERS, POOL_SIZE))

    def to_flat(self) -> np.ndarray:
        return np.concatenate([self.conv.ravel(), self.pool.ravel()])

    def copy(self) -> "QcnnParams":
        return QcnnParams(self.conv.copy(), self.pool.copy())

    def conv_params(self, layer: int) -> ConvParams:
        return ConvParams(tuple(self.conv[layer]))

    def pool_params(self, layer: int) -> PoolParams:
        return PoolParams(tuple(self.pool[layer]))

    @staticmethod
    def locate(param_id: int):
        """Map a flat parameter id to ('conv'|'pool', layer, slot)."""
        if not 0 <= param_id < N_PARAMS:
            raise ValueError(f"param id {param_id} out of range 0..{N_PARAMS - 1}")
        split = N_CONV_LAYERS * CONV_SIZE
        if param_id < split:
            return ("conv", param_id // CONV_SIZE, param_id % CONV_SIZE)
        rest = param_id - split
        return ("pool", rest // POOL_SIZE, rest % POOL_SIZE)

    @property
    def n_params(self) -> int:
        return N_PARAMS


@dataclass(frozen=True)
class QuantumFeatures:
    """retained: joint distribution of the retained pair; discarded: per-wire P(1)."""

    retained: np.ndarray
    discarded: np.ndarray

    def __post_init__(self):
        ret = np.array(self.retained, dtype=np.float64)
        dis = np.array(self.discarded, dtype=np.float64)
        if ret.shape != (4,) or dis.shape != (4,):
            raise ValueError("QuantumFeatures needs two 4-vectors")
        if abs(ret.sum() - 1.0) > 1e-10:
            raise ValueError(f"retained probabilities sum to {ret.sum()!r}, not 1")
        eps = 1e-9
        if ret.min() < -eps or ret.max() > 1 + eps or dis.min() < -eps or dis.max() > 1 + eps:
            raise ValueError("feature probabilities outside [0, 1]")
        object.__setattr__(self, "retained", np.clip(ret, 0.0, 1.0))
        object.__setattr__(self, "discarded", np.clip(dis, 0.0, 1.0))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.retained, self.discarded])


# ---------------------------------------------------------------------------
# circuit layout
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircuitLayout:
    """Wire assignments for all 6 conv layers and 2 pooling layers.

    conv_pairs[l] lists the (first, second) wire pairs of conv layer l;
    pool_pairs[l] lists (kept, discarded) with the kept wire acting as the
    control. retained_wires are the two pooling-2 survivors measured jointly
    (order fixes the readout bit pattern); discarded_wires are the pooling-1
    targets in pair order.
    """

    n_qubits: int
    conv_pairs: tuple
    pool_pairs: tuple
    retained_wires: tuple
    discarded_wires: tuple

    def __post_init__(self):
        if self.n_qubits != N_QUBITS:
            raise ValueError(f"layout requires {N_QUBITS} qubits, got {self.n_qubits}")
        if len(self.conv_pairs) != N_CONV_LAYERS or len(self.pool_pairs) != N_POOL_LAYERS:
            raise ValueError("layout needs 6 conv layers and 2 pool layers")
        if len(self.pool_pairs[0]) != 4 or len(self.pool_pairs[1]) != 2:
            raise ValueError("pooling must map 8->4 and 4->2 wires")
        for layer in tuple(self.conv_pairs) + tuple(self.pool_pairs):
            seen = [w for pair in layer for w in pair]
            if len(set(seen)) != len(seen):
                raise ValueError(f"wire repeated within a layer: {layer}")
            if any(not 0 <= w < self.n_qubits for w in seen):
                raise ValueError(f"wire out of range in layer {layer}")
        discarded = tuple(t for _, t in self.pool_pairs[0])
        if tuple(self.discarded_wires) != discarded:
            raise ValueError("discarded_wires must be the pooling-1 targets in order")
        survivors = {k for k, _ in self.pool_pairs[1]}
        if not set(self.retained_wires) <= survivors or len(self.retained_wires) != 2:
            raise ValueError("retained_wires must be the two pooling-2 survivors")


def _first_conv_pairs(live):
    return tuple((live[i], live[i + 1]) for i in range(0, len(live), 2))


def _second_conv_pairs(live, pairing):
    if pairing == "linear":
        return _first_conv_pairs(live)
    if pairing != "brick":
        raise ValueError(f"unknown pairing {pairing!r} (use 'brick' or 'linear')")
    if len(live) == 2:
        return ((live[1], live[0]),)
    shifted = live[1:] + live[:1]
    return _first_conv_pairs(shifted)


def build_layout(retained=None, pool_keep: str = "low", pairing: str = "brick") -> CircuitLayout:
    """Construct the standard 8-qubit layout.

    ``pool_keep`` picks the surviving wire of each pooling pair ('low' or
    'high' index). ``retained``, if given, is a pair of wires kept
    preferentially at both pooling stages and measured jointly in the given
    order; the pair must land in distinct pooling pairs at every stage
    (e.g. (7, 1) and (3, 5) work, (0, 1) cannot).
    """
    if pool_keep not in ("low", "high"):
        raise ValueError(f"pool_keep must be 'low' or 'high', got {pool_keep!r}")
    prefer = None
    if retained is not None:
        prefer = tuple(int(w) for w in retained)
        if len(prefer) != 2 or len(set(prefer)) != 2:
            raise ValueError(f"retained must be two distinct wires, got {retained}")
        if any(not 0 <= w < N_QUBITS for w in prefer):
            raise ValueError(f"retained wire out of range: {prefer}")

    def keep_of(x, y):
        if prefer is not None:
            x_in, y_in = x in prefer, y in prefer
            if x_in and y_in:
                raise ValueError(
                    f"retained wires {prefer} fall in the same pooling pair ({x}, {y})"
                )
            if x_in:
                return x
            if y_in:
                return y
        return min(x, y) if pool_keep == "low" else max(x, y)

    live = list(range(N_QUBITS))
    conv_pairs, pool_pairs = [], []
    for _ in range(2):
        conv_pairs.append(_first_conv_pairs(live))
        conv_pairs.append(_second_conv_pairs(live, pairing))
        pool = []
        for i in range(0, len(live), 2):
            x, y = live[i], live[i + 1]
            k = keep_of(x, y)
            pool.append((k, y if k == x else x))
        pool_pairs.append(tuple(pool))
        live = [k for k, _ in pool]
    conv_pairs.append(_first_conv_pairs(live))
    conv_pairs.append(_second_conv_pairs(live, pairing))

    if prefer is not None:
        if set(live) != set(prefer):
            raise ValueError(f"retained wires {prefer} not reachable; survivors are {live}")
        retained_wires = prefer
    else:
        retained_wires = tuple(live)
    discarded_wires = tuple(t for _, t in pool_pairs[0])
    return CircuitLayout(
        n_qubits=N_QUBITS,
        conv_pairs=tuple(conv_pairs),
        pool_pairs=tuple(pool_pairs),
        retained_wires=retained_wires,
        discarded_wires=discarded_wires,
    )


# ---------------------------------------------------------------------------
# program compilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GateProgram:
    """Flat kernel program for one layout, with the shared-parameter map.

    param_id[k] is the flat QcnnParams index feeding op k (-1 for CNOT);
    ops before ``pool1_end`` are blocks 1 and pooling 1.
    """

    n_qubits: int
    opcode: np.ndarray
    stride_a: np.ndarray
    stride_b: np.ndarray
    param_id: np.ndarray
    pool1_end: int
    ret_strides: np.ndarray
    disc_strides: np.ndarray
    n_params: int


def _emit_conv(ops, pair, base, n):
    a, b = (wire_stride(pair[0], n), wire_stride(pair[1], n))
    RY, RZ, CNOT = kernels.OP_RY, kernels.OP_RZ, kernels.OP_CNOT
    ops += [
        # U3(theta1, phi2, lam3) on wire 1 and U3(theta4, phi5, lam6) on wire 2
        (RZ, a, 0, base + 2), (RY, a, 0, base + 0), (RZ, a, 0, base + 1),
        (RZ, b, 0, base + 5), (RY, b, 0, base + 3), (RZ, b, 0, base + 4),
        (CNOT, a, b, -1),
        (RY, a, 0, base + 6), (RZ, b, 0, base + 7),
        (CNOT, b, a, -1),
        (RY, a, 0, base + 8),
        (CNOT, a, b, -1),
        # U3(theta10, phi11, lam12) on wire 1 and U3(theta13, phi14, lam15) on wire 2
        (RZ, a, 0, base + 11), (RY, a, 0, base + 9), (RZ, a, 0, base + 10),
        (RZ, b, 0, base + 14), (RY, b, 0, base + 12), (RZ, b, 0, base + 13),
    ]


def _emit_pool(ops, kept, discarded, base, n):
    c, t = wire_stride(kept, n), wire_stride(discarded, n)
    ops.append((kernels.OP_CRZ, c, t, base + 0))
    ops.append((kernels.OP_CRX, c, t, base + 1))


@lru_cache(maxsize=None)
def compile_program(layout: CircuitLayout) -> GateProgram:
    """Lower a layout to flat kernel arrays (cached per layout)."""
    n = layout.n_qubits
    ops = []
    pool1_end = 0
    conv_iter = iter(range(N_CONV_LAYERS))
    for block in range(3):
        for _ in range(2):
            layer = next(conv_iter)
            for pair in layout.conv_pairs[layer]:
                _emit_conv(ops, pair, layer * CONV_SIZE, n)
        if block < 2:
            for kept, discarded in layout.pool_pairs[block]:
                _emit_pool(ops, kept, discarded, N_CONV_LAYERS * CONV_SIZE + block * POOL_SIZE, n)
        if block == 0:
            pool1_end = len(ops)
    arr = np.array(ops, dtype=np.int64)
    return GateProgram(
        n_qubits=n,
        opcode=arr[:, 0].copy(),
        stride_a=arr[:, 1].copy(),
        stride_b=arr[:, 2].copy(),
        param_id=arr[:, 3].copy(),
        pool1_end=pool1_end,
        ret_strides=np.array([wire_stride(w, n) for w in layout.retained_wires], dtype=np.int64),
        disc_strides=np.array([wire_stride(w, n) for w in layout.discarded_wires], dtype=np.int64),
        n_params=N_PARAMS,
    )


def instance_angles(program: GateProgram, flat_params: np.ndarray) -> np.ndarray:
    """Per-op angles: the shared parameter of each op (0 for CNOT)."""
    angles = np.zeros(program.opcode.shape[0])
    mask = program.param_id >= 0
    angles[mask] = flat_params[program.param_id[mask]]
    return angles


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def run_features(psi0: np.ndarray, flat_params: np.ndarray, program: GateProgram,
                 backend=None) -> np.ndarray:
    """Raw 8-vector of features from an amplitude array (hot path)."""
    angles = instance_angles(program, flat_params)
    psi = np.array(psi0, dtype=np.complex128)
    kernels.run_program(psi, program.opcode, program.stride_a, program.stride_b,
                        angles, backend=backend)
    return kernels.qcnn_features(psi, program.ret_strides, program.disc_strides,
                                 backend=backend)


def forward(input_state: StateVector, params: QcnnParams, layout: CircuitLayout,
            backend=None) -> QuantumFeatures:
    """Full backbone pass: returns the retained and discarded 4-vectors."""
    if input_state.n_qubits != layout.n_qubits:
        raise ValueError(
            f"state has {input_state.n_qubits} qubits, layout needs {layout.n_qubits}"
        )
    program = compile_program(layout)
    feats = run_features(input_state.amplitudes, params.to_flat(), program, backend=backend)
    return QuantumFeatures(retained=feats[:4], discarded=feats[4:])


def discarded_marginals_after_pool1(input_state: StateVector, params: QcnnParams,
                                    layout: CircuitLayout, backend=None) -> np.ndarray:
    """P(1) of the pooling-1 targets read immediately after pooling 1.

    Later layers never touch these wires, so this must equal the discarded
    features of :func:`forward`; tests assert the equivalence.
    """
    program = compile_program(layout)
    angles = instance_angles(program, params.to_flat())
    stop = program.pool1_end
    psi = np.array(input_state.amplitudes, dtype=np.complex128)
    kernels.run_program(psi, program.opcode[:stop], program.stride_a[:stop],
                        program.stride_b[:stop], angles[:stop], backend=backend)
    feats = kernels.qcnn_features(psi, program.ret_strides, program.disc_strides,
                                  backend=backend)
    return feats[4:]


def apply_conv_unitary(state: StateVector, pair, params: ConvParams,
                       backend=None) -> StateVector:
    """Apply one 15-parameter convolution template to a wire pair."""
    a, b = (int(pair[0]), int(pair[1]))
    if a == b:
        raise ValueError("convolution pair wires must be distinct")
    for w in (a, b):
        if not 0 <= w < state.n_qubits:
            raise ValueError(f"wire {w} out of range for {state.n_qubits} qubits")
    ops = []
    _emit_conv(ops, (a, b), 0, state.n_qubits)
    return _apply_ops(state, ops, params.angles, backend)


def apply_pool_unitary(state: StateVector, control: int, target: int,
                       params: PoolParams, backend=None) -> StateVector:
    """Apply CRZ(phi1) then CRX(phi2) with the given control and target."""
    control, target = int(control), int(target)
    if control == target:
        raise ValueError("pooling control and target must be distinct")
    for w in (control, target):
        if not 0 <= w < state.n_qubits:
            raise ValueError(f"wire {w} out of range for {state.n_qubits} qubits")
    ops = []
    _emit_pool(ops, control, target, 0, state.n_qubits)
    return _apply_ops(state, ops, params.angles, backend)


def _apply_ops(state: StateVector, ops, template_angles, backend) -> StateVector:
    arr = np.array(ops, dtype=np.int64)
    angles = np.zeros(arr.shape[0])
    mask = arr[:, 3] >= 0
    angles[mask] = np.asarray(template_angles)[arr[mask, 3]]
    psi = np.array(state.amplitudes, dtype=np.complex128)
    kernels.run_program(psi, arr[:, 0], arr[:, 1], arr[:, 2], angles, backend=backend)
    return StateVector(state.n_qubits, psi)

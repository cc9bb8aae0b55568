"""Dense statevector simulation for 1..10 qubits.

Conventions (fixed package-wide):
  * qubit 0 is the most significant bit of the basis index;
  * rotations are R_P(t) = exp(-i t sigma_P / 2) for P in {X, Y, Z};
  * U3(theta, phi, lam) = RZ(phi) . RY(theta) . RZ(lam);
  * controlled rotations act on the target iff the control is |1>.

States are immutable after construction (the amplitude buffer is frozen);
gate application returns a new state. There is no mid-circuit collapse
anywhere in the package: statistics of wires are always marginals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

MAX_QUBITS = 10
NORM_TOL = 1e-12

# kind -> (number of wires, number of angles)
GATE_ARITY = {
    "RX": (1, 1),
    "RY": (1, 1),
    "RZ": (1, 1),
    "U3": (1, 3),
    "CNOT": (2, 0),
    "CRX": (2, 1),
    "CRZ": (2, 1),
}

_ROT_OPCODE = {"RX": kernels.OP_RX, "RY": kernels.OP_RY, "RZ": kernels.OP_RZ}
_CTRL_OPCODE = {"CRX": kernels.OP_CRX, "CRZ": kernels.OP_CRZ}


@dataclass(frozen=True)
class StateVector:
    """n-qubit register: 2**n complex amplitudes, unit L2 norm."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        amps = np.array(self.amplitudes, dtype=np.complex128)  # private copy
        if amps.ndim != 1 or amps.shape[0] != 1 << self.n_qubits:
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {np.shape(self.amplitudes)}"
            )
        norm_sq = float(np.sum(amps.real ** 2 + amps.imag ** 2))
        if abs(norm_sq - 1.0) >= NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm_sq!r}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def probabilities(self) -> np.ndarray:
        """|amplitude|^2 over the full basis."""
        a = self.amplitudes
        return a.real ** 2 + a.imag ** 2


@dataclass(frozen=True)
class Gate:
    """One gate: kind in {RX,RY,RZ,U3,CNOT,CRX,CRZ}, wires, angles (radians)."""

    kind: str
    wires: tuple
    angles: tuple = ()

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        wires = tuple(int(w) for w in self.wires)
        angles = tuple(float(a) for a in self.angles)
        n_wires, n_angles = GATE_ARITY[self.kind]
        if len(wires) != n_wires:
            raise ValueError(f"{self.kind} takes {n_wires} wire(s), got {wires}")
        if len(angles) != n_angles:
            raise ValueError(f"{self.kind} takes {n_angles} angle(s), got {angles}")
        if len(set(wires)) != len(wires):
            raise ValueError(f"gate wires must be distinct, got {wires}")
        if any(w < 0 for w in wires):
            raise ValueError(f"negative wire index in {wires}")
        if not all(np.isfinite(a) for a in angles):
            raise ValueError(f"non-finite gate angle in {angles}")
        object.__setattr__(self, "wires", wires)
        object.__setattr__(self, "angles", angles)


def wire_stride(wire: int, n_qubits: int) -> int:
    """Bit stride of ``wire`` under the qubit-0-is-MSB convention."""
    return 1 << (n_qubits - 1 - wire)


def init_zero(n_qubits: int) -> StateVector:
    """|0...0> on ``n_qubits`` qubits."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def gate_ops(gate: Gate, n_qubits: int):
    """Flatten a Gate into kernel program arrays (U3 becomes RZ, RY, RZ)."""
    for w in gate.wires:
        if w >= n_qubits:
            raise ValueError(f"wire {w} out of range for {n_qubits} qubits")
    if gate.kind == "U3":
        # U3(t, p, l) = RZ(p) RY(t) RZ(l): RZ(l) is applied first.
        s = wire_stride(gate.wires[0], n_qubits)
        t, p, l = gate.angles
        opcode = [kernels.OP_RZ, kernels.OP_RY, kernels.OP_RZ]
        stride_a = [s, s, s]
        stride_b = [0, 0, 0]
        angles = [l, t, p]
    elif gate.kind in _ROT_OPCODE:
        opcode = [_ROT_OPCODE[gate.kind]]
        stride_a = [wire_stride(gate.wires[0], n_qubits)]
        stride_b = [0]
        angles = [gate.angles[0]]
    elif gate.kind == "CNOT":
        opcode = [kernels.OP_CNOT]
        stride_a = [wire_stride(gate.wires[0], n_qubits)]
        stride_b = [wire_stride(gate.wires[1], n_qubits)]
        angles = [0.0]
    else:
        opcode = [_CTRL_OPCODE[gate.kind]]
        stride_a = [wire_stride(gate.wires[0], n_qubits)]
        stride_b = [wire_stride(gate.wires[1], n_qubits)]
        angles = [gate.angles[0]]
    return (
        np.array(opcode, dtype=np.int64),
        np.array(stride_a, dtype=np.int64),
        np.array(stride_b, dtype=np.int64),
        np.array(angles, dtype=np.float64),
    )


def apply_gate(state: StateVector, gate: Gate, backend=None) -> StateVector:
    """Return ``gate`` applied to ``state`` (norm is preserved by unitarity)."""
    opcode, sa, sb, angles = gate_ops(gate, state.n_qubits)
    psi = np.array(state.amplitudes, dtype=np.complex128)
    kernels.run_program(psi, opcode, sa, sb, angles, backend=backend)
    return StateVector(state.n_qubits, psi)


def _check_wires(state: StateVector, wires) -> tuple:
    wires = tuple(int(w) for w in wires)
    if len(set(wires)) != len(wires):
        raise ValueError(f"wires must be distinct, got {wires}")
    for w in wires:
        if not 0 <= w < state.n_qubits:
            raise ValueError(f"wire {w} out of range for {state.n_qubits} qubits")
    return wires


def joint_probabilities(state: StateVector, wires) -> np.ndarray:
    """Marginal joint distribution of up to 4 wires, in the given wire order.

    Entry b sums |amplitude|^2 over every basis state whose restriction to
    ``wires`` equals bit pattern b (wires[0] is the pattern's MSB).
    """
    wires = _check_wires(state, wires)
    if not 1 <= len(wires) <= 4:
        raise ValueError(f"joint_probabilities supports 1..4 wires, got {len(wires)}")
    p = state.probabilities().reshape([2] * state.n_qubits)
    rest = [q for q in range(state.n_qubits) if q not in wires]
    return p.transpose(list(wires) + rest).reshape(1 << len(wires), -1).sum(axis=1)


def excitation_probabilities(state: StateVector, wires) -> np.ndarray:
    """Per-wire P(|1>) marginals, one entry per requested wire."""
    wires = _check_wires(state, wires)
    p = state.probabilities().reshape([2] * state.n_qubits)
    out = np.empty(len(wires))
    for j, w in enumerate(wires):
        axes = tuple(q for q in range(state.n_qubits) if q != w)
        out[j] = p.sum(axis=axes)[1]
    return out

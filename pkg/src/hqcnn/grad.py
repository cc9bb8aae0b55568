"""End-to-end gradients: analytic backprop through the classical stack and
parameter-shift gradients through the quantum circuit.

Single-qubit rotation parameters use the two-term rule
    df/dt = [f(t + pi/2) - f(t - pi/2)] / 2,
controlled-rotation parameters the four-term rule
    df/dt = c+ [f(t + pi/2) - f(t - pi/2)] - c- [f(t + 3pi/2) - f(t - 3pi/2)],
with c+- = (sqrt(2) +- 1) / (4 sqrt(2)).

Weight sharing: each shared convolution angle feeds several gate instances;
the rule is applied per instance (only that instance's angle is shifted) and
the contributions are summed, which is the chain rule over instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import heads, kernels
from .heads import HeadParams, forward_heads, rescale, softmax
from .qcnn import (
    CircuitLayout,
    GateProgram,
    QcnnParams,
    QuantumFeatures,
    compile_program,
    instance_angles,
    run_features,
)

TWO_TERM_SHIFT = np.pi / 2
FOUR_TERM_SHIFTS = (np.pi / 2, 3 * np.pi / 2)
C_PLUS = (np.sqrt(2.0) + 1.0) / (4.0 * np.sqrt(2.0))
C_MINUS = (np.sqrt(2.0) - 1.0) / (4.0 * np.sqrt(2.0))

_CONTROLLED_OPS = (kernels.OP_CRX, kernels.OP_CRZ)


@dataclass(frozen=True, eq=False)
class ShiftTable:
    """One row per circuit evaluation of the parameter-shift rule."""

    op_index: np.ndarray   # which instance angle is shifted
    delta: np.ndarray      # shift amount
    weight: np.ndarray     # contribution weight
    param_id: np.ndarray   # shared parameter receiving the contribution

    def __len__(self):
        return self.op_index.shape[0]


@lru_cache(maxsize=None)
def shift_table(program: GateProgram) -> ShiftTable:
    """Shift plan for every parameterized gate instance of a program."""
    op_index, delta, weight, param_id = [], [], [], []

    def add(k, d, w, pid):
        op_index.append(k)
        delta.append(d)
        weight.append(w)
        param_id.append(pid)

    for k in range(program.opcode.shape[0]):
        pid = int(program.param_id[k])
        if pid < 0:
            continue
        if program.opcode[k] in _CONTROLLED_OPS:
            a, b = FOUR_TERM_SHIFTS
            add(k, +a, +C_PLUS, pid)
            add(k, -a, -C_PLUS, pid)
            add(k, +b, -C_MINUS, pid)
            add(k, -b, +C_MINUS, pid)
        else:
            add(k, +TWO_TERM_SHIFT, +0.5, pid)
            add(k, -TWO_TERM_SHIFT, -0.5, pid)
    return ShiftTable(
        op_index=np.array(op_index, dtype=np.int64),
        delta=np.array(delta, dtype=np.float64),
        weight=np.array(weight, dtype=np.float64),
        param_id=np.array(param_id, dtype=np.int64),
    )


def shift_evaluation_count(program: GateProgram) -> int:
    """Circuit executions needed for one sample's full quantum gradient."""
    return len(shift_table(program))


def quantum_grad_program(psi0: np.ndarray, flat_params: np.ndarray,
                         program: GateProgram, upstream: np.ndarray,
                         backend=None) -> np.ndarray:
    """Parameter-shift gradient contracted with upstream dL/dfeatures (hot path)."""
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (8,):
        raise ValueError(f"upstream must have 8 entries, got shape {upstream.shape}")
    if not np.all(np.isfinite(upstream)):
        raise ValueError("non-finite upstream gradient")
    table = shift_table(program)
    grads = np.zeros(program.n_params)
    if not np.any(upstream):
        return grads
    base_angles = instance_angles(program, np.asarray(flat_params, dtype=np.float64))
    feats = kernels.batch_shift_features(
        psi0, program.opcode, program.stride_a, program.stride_b, base_angles,
        table.op_index, table.delta, program.ret_strides, program.disc_strides,
        backend=backend,
    )
    np.add.at(grads, table.param_id, table.weight * (feats @ upstream))
    return grads


def quantum_grad(state, params: QcnnParams, layout: CircuitLayout,
                 upstream, backend=None) -> np.ndarray:
    """dL/dtheta for all 94 quantum angles, given dL/dfeatures (8 entries:
    retained joint probabilities then discarded excitations)."""
    program = compile_program(layout)
    psi0 = state.amplitudes if hasattr(state, "amplitudes") else state
    return quantum_grad_program(psi0, params.to_flat(), program,
                                np.asarray(upstream, dtype=np.float64), backend=backend)


def backward_classical(features: QuantumFeatures, params: HeadParams, label: int):
    """Analytic gradients of the cross-entropy loss through the classical stack.

    Returns (head_grads, dL/dx_ret_scaled, dL/dx_disc_scaled). In baseline
    mode the discarded stream does not exist and its gradient is zero.
    """
    x_ret = rescale(features.retained)
    x_disc = rescale(features.discarded) if params.recycle else None
    cache = forward_heads(x_ret, x_disc, params)
    return _backward_from_cache(cache, params, label)


def _backward_from_cache(cache, params: HeadParams, label: int):
    grads = params.zeros_like()
    m = params.m

    dz = softmax(cache.z)
    dz[int(label)] -= 1.0

    if params.final_layer:
        grads.w_final[:] = np.outer(dz, cache.fused)
        grads.b_final[:] = dz
        dfused = params.w_final.T @ dz
    else:
        dfused = dz

    if params.recycle:
        dy_ret = dfused * cache.y_disc
        dy_disc = dfused * cache.y_ret
        # recover stage
        da = dy_disc * (1.0 - cache.y_disc ** 2)
        grads.w_out[:] = np.outer(da, cache.h)
        grads.b_out[:] = da
        dh = params.w_out.T @ da
        # expand stage
        da = dh * (1.0 - cache.h ** 2)
        grads.w_h[:] = np.outer(da, cache.y1)
        grads.b_h[:] = da
        dy1 = params.w_h.T @ da
        # projection stage
        da = dy1 * (1.0 - cache.y1 ** 2)
        grads.w_disc[:] = np.outer(da, cache.x_disc)
        grads.b_disc[:] = da
        dx_disc = params.w_disc.T @ da
    else:
        dy_ret = dfused
        dx_disc = np.zeros(m)

    da = dy_ret * (1.0 - cache.y_ret ** 2)
    grads.w_ret[:] = np.outer(da, cache.x_ret)
    grads.b_ret[:] = da
    dx_ret = params.w_ret.T @ da
    return grads, dx_ret, dx_disc


def sample_loss_and_grads(psi0: np.ndarray, flat_params: np.ndarray,
                          program: GateProgram, head_params: HeadParams,
                          label: int, backend=None):
    """Loss, logits, and all gradients for one embedded sample.

    The upstream for the quantum circuit is dL/dp = 4 dL/dx_scaled, the
    chain through the affine rescaling.
    """
    feats = run_features(psi0, flat_params, program, backend=backend)
    features = QuantumFeatures(retained=feats[:4], discarded=feats[4:])
    x_ret = rescale(features.retained)
    x_disc = rescale(features.discarded) if head_params.recycle else None
    cache = forward_heads(x_ret, x_disc, head_params)
    head_grads, dx_ret, dx_disc = _backward_from_cache(cache, head_params, label)
    upstream = heads.SCALE * np.concatenate([dx_ret, dx_disc])
    qgrads = quantum_grad_program(psi0, flat_params, program, upstream, backend=backend)
    return heads.loss(cache.z, label), cache.z, head_grads, qgrads


def finite_diff(fn, params, index: int, eps: float) -> float:
    """Central difference [fn(p + eps e_i) - fn(p - eps e_i)] / (2 eps)."""
    params = np.asarray(params, dtype=np.float64)
    up = params.copy()
    up[index] += eps
    down = params.copy()
    down[index] -= eps
    return (fn(up) - fn(down)) / (2.0 * eps)

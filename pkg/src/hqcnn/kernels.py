"""Statevector gate kernels: numba-jitted hot loops with a pure-numpy fallback.

A circuit is a flat program of opcodes acting on a dense complex128 state of
2**n amplitudes. Bit convention is fixed package-wide: qubit 0 is the MOST
significant bit of the basis index, so the stride of qubit q in an n-qubit
register is 1 << (n - 1 - q).

Backend selection: the env var HQCNN_KERNEL picks "numba" or "numpy"
("auto" / unset prefers numba when importable). Every public function also
accepts an explicit ``backend=`` override, which is what the benchmark and
the backend-equivalence tests use.
"""

from __future__ import annotations

import math
import os

import numpy as np

OP_RX = 0
OP_RY = 1
OP_RZ = 2
OP_CNOT = 3
OP_CRX = 4
OP_CRZ = 5

ENV_FLAG = "HQCNN_KERNEL"

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# loop kernels (numba source; never called uncompiled)
# ---------------------------------------------------------------------------

def _run_program_loops(psi, opcode, stride_a, stride_b, angles):
    """Apply a gate program to ``psi`` in place.

    1-qubit rotations use stride_a; controlled ops use (control=stride_a,
    target=stride_b). All rotations follow R_P(t) = exp(-i t sigma_P / 2).
    """
    dim = psi.shape[0]
    for k in range(opcode.shape[0]):
        op = opcode[k]
        sa = stride_a[k]
        if op == OP_CNOT:
            sb = stride_b[k]
            for i in range(dim):
                if (i & sa) != 0 and (i & sb) == 0:
                    j = i + sb
                    tmp = psi[i]
                    psi[i] = psi[j]
                    psi[j] = tmp
        elif op <= OP_RZ:
            half = 0.5 * angles[k]
            c = math.cos(half)
            s = math.sin(half)
            if op == OP_RX:
                u00 = c + 0.0j
                u01 = -1j * s
                u10 = -1j * s
                u11 = c + 0.0j
            elif op == OP_RY:
                u00 = c + 0.0j
                u01 = -s + 0.0j
                u10 = s + 0.0j
                u11 = c + 0.0j
            else:
                u00 = complex(c, -s)
                u01 = 0.0j
                u10 = 0.0j
                u11 = complex(c, s)
            block = sa * 2
            for base in range(0, dim, block):
                for off in range(sa):
                    i0 = base + off
                    i1 = i0 + sa
                    a = psi[i0]
                    b = psi[i1]
                    psi[i0] = u00 * a + u01 * b
                    psi[i1] = u10 * a + u11 * b
        else:
            sb = stride_b[k]
            half = 0.5 * angles[k]
            c = math.cos(half)
            s = math.sin(half)
            if op == OP_CRX:
                u00 = c + 0.0j
                u01 = -1j * s
                u10 = -1j * s
                u11 = c + 0.0j
            else:
                u00 = complex(c, -s)
                u01 = 0.0j
                u10 = 0.0j
                u11 = complex(c, s)
            for i in range(dim):
                if (i & sa) != 0 and (i & sb) == 0:
                    j = i + sb
                    a = psi[i]
                    b = psi[j]
                    psi[i] = u00 * a + u01 * b
                    psi[j] = u10 * a + u11 * b


def _features_loops(psi, ret_hi, ret_lo, disc_strides):
    """Joint distribution of the two retained wires + P(1) of 4 discarded wires."""
    out = np.zeros(8)
    dim = psi.shape[0]
    for i in range(dim):
        a = psi[i]
        p = a.real * a.real + a.imag * a.imag
        pat = 0
        if i & ret_hi:
            pat += 2
        if i & ret_lo:
            pat += 1
        out[pat] += p
        for j in range(4):
            if i & disc_strides[j]:
                out[4 + j] += p
    return out


if HAVE_NUMBA:
    _run_program_nb = njit(cache=True)(_run_program_loops)
    _features_nb = njit(cache=True)(_features_loops)

    @njit(cache=True, parallel=True)
    def _batch_shift_features_nb(
        psi0, opcode, stride_a, stride_b, base_angles,
        shift_op, shift_delta, ret_hi, ret_lo, disc_strides,
    ):
        n_ev = shift_op.shape[0]
        out = np.empty((n_ev, 8))
        for e in prange(n_ev):
            psi = psi0.copy()
            angles = base_angles.copy()
            o = shift_op[e]
            if o >= 0:
                angles[o] += shift_delta[e]
            _run_program_nb(psi, opcode, stride_a, stride_b, angles)
            out[e] = _features_nb(psi, ret_hi, ret_lo, disc_strides)
        return out


# ---------------------------------------------------------------------------
# numpy fallback
# ---------------------------------------------------------------------------

def _rot2x2(op, theta):
    half = 0.5 * theta
    c = math.cos(half)
    s = math.sin(half)
    if op == OP_RX or op == OP_CRX:
        return c, -1j * s, -1j * s, c
    if op == OP_RY:
        return c, -s, s, c
    return complex(c, -s), 0.0j, 0.0j, complex(c, s)


def _run_program_np(psi, opcode, stride_a, stride_b, angles):
    dim = psi.shape[0]
    idx = np.arange(dim)
    for k in range(opcode.shape[0]):
        op = int(opcode[k])
        sa = int(stride_a[k])
        if op == OP_CNOT:
            sb = int(stride_b[k])
            src = idx[((idx & sa) != 0) & ((idx & sb) == 0)]
            dst = src + sb
            tmp = psi[src].copy()
            psi[src] = psi[dst]
            psi[dst] = tmp
        elif op <= OP_RZ:
            u00, u01, u10, u11 = _rot2x2(op, float(angles[k]))
            view = psi.reshape(-1, 2, sa)
            a = view[:, 0, :].copy()
            b = view[:, 1, :]
            view[:, 0, :] = u00 * a + u01 * b
            view[:, 1, :] = u10 * a + u11 * b
        else:
            u00, u01, u10, u11 = _rot2x2(op, float(angles[k]))
            sb = int(stride_b[k])
            src = idx[((idx & sa) != 0) & ((idx & sb) == 0)]
            dst = src + sb
            a = psi[src]
            b = psi[dst]
            psi[src] = u00 * a + u01 * b
            psi[dst] = u10 * a + u11 * b


def _features_np(psi, ret_hi, ret_lo, disc_strides):
    p = psi.real ** 2 + psi.imag ** 2
    idx = np.arange(p.shape[0])
    pattern = (((idx & ret_hi) != 0).astype(np.int64) << 1) | ((idx & ret_lo) != 0)
    out = np.empty(8)
    out[:4] = np.bincount(pattern, weights=p, minlength=4)
    for j in range(4):
        out[4 + j] = p[(idx & int(disc_strides[j])) != 0].sum()
    return out


def _batch_shift_features_np(
    psi0, opcode, stride_a, stride_b, base_angles,
    shift_op, shift_delta, ret_hi, ret_lo, disc_strides,
):
    n_ev = shift_op.shape[0]
    out = np.empty((n_ev, 8))
    for e in range(n_ev):
        psi = psi0.copy()
        angles = base_angles
        o = int(shift_op[e])
        if o >= 0:
            angles = base_angles.copy()
            angles[o] += shift_delta[e]
        _run_program_np(psi, opcode, stride_a, stride_b, angles)
        out[e] = _features_np(psi, ret_hi, ret_lo, disc_strides)
    return out


# ---------------------------------------------------------------------------
# backend dispatch
# ---------------------------------------------------------------------------

def _resolve_backend(name):
    if name is None or name == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        return "numba"
    if name == "numpy":
        return "numpy"
    raise ValueError(f"unknown kernel backend {name!r} (use 'numba', 'numpy' or 'auto')")


_backend = _resolve_backend(os.environ.get(ENV_FLAG, "auto").strip().lower() or "auto")


def get_backend() -> str:
    """Currently selected default backend ('numba' or 'numpy')."""
    return _backend


def set_backend(name: str) -> str:
    """Override the default backend; returns the resolved name."""
    global _backend
    _backend = _resolve_backend(name)
    return _backend


def _as_program_arrays(opcode, stride_a, stride_b, angles):
    return (
        np.ascontiguousarray(opcode, dtype=np.int64),
        np.ascontiguousarray(stride_a, dtype=np.int64),
        np.ascontiguousarray(stride_b, dtype=np.int64),
        np.ascontiguousarray(angles, dtype=np.float64),
    )


def run_program(psi, opcode, stride_a, stride_b, angles, backend=None):
    """Apply the gate program to ``psi`` (complex128, modified in place)."""
    opcode, stride_a, stride_b, angles = _as_program_arrays(opcode, stride_a, stride_b, angles)
    which = _backend if backend is None else _resolve_backend(backend)
    if which == "numba":
        _run_program_nb(psi, opcode, stride_a, stride_b, angles)
    else:
        _run_program_np(psi, opcode, stride_a, stride_b, angles)
    return psi


def qcnn_features(psi, ret_strides, disc_strides, backend=None):
    """8-vector: joint probs of the retained wire pair, then 4 discarded P(1)."""
    disc = np.ascontiguousarray(disc_strides, dtype=np.int64)
    hi, lo = int(ret_strides[0]), int(ret_strides[1])
    which = _backend if backend is None else _resolve_backend(backend)
    if which == "numba":
        return _features_nb(psi, hi, lo, disc)
    return _features_np(psi, hi, lo, disc)


def batch_shift_features(
    psi0, opcode, stride_a, stride_b, base_angles,
    shift_op, shift_delta, ret_strides, disc_strides, backend=None,
):
    """Features after running the program once per row of the shift table.

    Row e reruns the program from ``psi0`` with ``base_angles`` except that
    instance angle ``shift_op[e]`` is offset by ``shift_delta[e]``
    (shift_op < 0 means no shift). Rows are independent; the numba path
    evaluates them in parallel. Returns an (n_shifts, 8) float array.
    """
    opcode, stride_a, stride_b, base_angles = _as_program_arrays(
        opcode, stride_a, stride_b, base_angles
    )
    shift_op = np.ascontiguousarray(shift_op, dtype=np.int64)
    shift_delta = np.ascontiguousarray(shift_delta, dtype=np.float64)
    disc = np.ascontiguousarray(disc_strides, dtype=np.int64)
    hi, lo = int(ret_strides[0]), int(ret_strides[1])
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    which = _backend if backend is None else _resolve_backend(backend)
    if which == "numba":
        return _batch_shift_features_nb(
            psi0, opcode, stride_a, stride_b, base_angles,
            shift_op, shift_delta, hi, lo, disc,
        )
    return _batch_shift_features_np(
        psi0, opcode, stride_a, stride_b, base_angles,
        shift_op, shift_delta, hi, lo, disc,
    )

"""Low-level statevector kernels with a numba fast path.

Two interchangeable backends live here: ``numba`` (default, @njit compiled)
and ``numpy`` (pure vectorized fallback). Selection happens once at import:

* ``VERIVQE_DISABLE_NUMBA=1`` forces the numpy backend;
* a missing/broken numba install silently falls back to numpy.

All kernels address qubits by *bit position* counted from the least
significant bit of the basis index. Amplitude arrays are 1-D complex128.
Randomness never happens inside a kernel: callers pass pre-drawn uniforms,
so RNG streams are identical across backends.
"""

from __future__ import annotations

import os

import numpy as np

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


# ---------------------------------------------------------------------------
# loop bodies (numba-compilable python)
# ---------------------------------------------------------------------------

def _apply_1q(state, bit, m00, m01, m10, m11):
    stride = 1 << bit
    n = state.shape[0]
    for base in range(0, n, 2 * stride):
        for k in range(base, base + stride):
            a0 = state[k]
            a1 = state[k + stride]
            state[k] = m00 * a0 + m01 * a1
            state[k + stride] = m10 * a0 + m11 * a1


def _apply_cz(state, bit1, bit2):
    n = state.shape[0]
    mask = (1 << bit1) | (1 << bit2)
    for k in range(n):
        if k & mask == mask:
            state[k] = -state[k]


def _apply_cnot(state, control_bit, target_bit):
    n = state.shape[0]
    cmask = 1 << control_bit
    tmask = 1 << target_bit
    for k in range(n):
        if (k & cmask) and not (k & tmask):
            j = k | tmask
            tmp = state[k]
            state[k] = state[j]
            state[j] = tmp


def _append_qubit(state, a0, a1):
    # new qubit becomes the most significant bit, existing positions unchanged
    n = state.shape[0]
    out = np.empty(2 * n, dtype=np.complex128)
    for k in range(n):
        out[k] = state[k] * a0
        out[n + k] = state[k] * a1
    return out


def _measure_xy_remove(state, bit, delta, u):
    """Project the qubit at `bit` onto the |+_delta>/|-_delta> basis and
    drop it from the register. Returns (outcome, collapsed_state)."""
    n = state.shape[0]
    half = n // 2
    stride = 1 << bit
    phase = np.exp(-1j * delta)
    a0 = np.empty(half, dtype=np.complex128)
    a1 = np.empty(half, dtype=np.complex128)
    j = 0
    for base in range(0, n, 2 * stride):
        for k in range(base, base + stride):
            lo = state[k]
            hi = state[k + stride]
            a0[j] = (lo + phase * hi) * _INV_SQRT2
            a1[j] = (lo - phase * hi) * _INV_SQRT2
            j += 1
    p0 = 0.0
    for k in range(half):
        p0 += a0[k].real * a0[k].real + a0[k].imag * a0[k].imag
    outcome = 0 if u < p0 else 1
    sel = a0 if outcome == 0 else a1
    norm = 0.0
    for k in range(half):
        norm += sel[k].real * sel[k].real + sel[k].imag * sel[k].imag
    inv = 1.0 / np.sqrt(norm)
    for k in range(half):
        sel[k] = sel[k] * inv
    return outcome, sel


_LOOP_KERNELS = {
    "apply_1q": _apply_1q,
    "apply_cz": _apply_cz,
    "apply_cnot": _apply_cnot,
    "append_qubit": _append_qubit,
    "measure_xy_remove": _measure_xy_remove,
}


# ---------------------------------------------------------------------------
# numpy backend (vectorized twins of the loop bodies)
# ---------------------------------------------------------------------------

def _np_pair_views(state, bit):
    stride = 1 << bit
    n = state.shape[0]
    v = state.reshape(n // (2 * stride), 2, stride)
    return v[:, 0, :], v[:, 1, :]


def _np_apply_1q(state, bit, m00, m01, m10, m11):
    lo, hi = _np_pair_views(state, bit)
    new_lo = m00 * lo + m01 * hi
    new_hi = m10 * lo + m11 * hi
    lo[...] = new_lo
    hi[...] = new_hi


def _np_apply_cz(state, bit1, bit2):
    idx = np.arange(state.shape[0])
    mask = (1 << bit1) | (1 << bit2)
    sel = (idx & mask) == mask
    state[sel] = -state[sel]


def _np_apply_cnot(state, control_bit, target_bit):
    idx = np.arange(state.shape[0])
    cmask = 1 << control_bit
    tmask = 1 << target_bit
    src = ((idx & cmask) != 0) & ((idx & tmask) == 0)
    dst = idx[src] | tmask
    tmp = state[idx[src]].copy()
    state[idx[src]] = state[dst]
    state[dst] = tmp


def _np_append_qubit(state, a0, a1):
    return np.concatenate([state * a0, state * a1])


def _np_measure_xy_remove(state, bit, delta, u):
    lo, hi = _np_pair_views(state, bit)
    phase = np.exp(-1j * delta)
    a0 = ((lo + phase * hi) * _INV_SQRT2).reshape(-1)
    a1 = ((lo - phase * hi) * _INV_SQRT2).reshape(-1)
    p0 = float(np.sum(a0.real * a0.real + a0.imag * a0.imag))
    outcome = 0 if u < p0 else 1
    sel = a0 if outcome == 0 else a1
    norm = float(np.sum(sel.real * sel.real + sel.imag * sel.imag))
    sel = sel / np.sqrt(norm)
    return outcome, sel


NUMPY_KERNELS = {
    "apply_1q": _np_apply_1q,
    "apply_cz": _np_apply_cz,
    "apply_cnot": _np_apply_cnot,
    "append_qubit": _np_append_qubit,
    "measure_xy_remove": _np_measure_xy_remove,
}


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

def _build_numba_kernels():
    from numba import njit

    return {name: njit(cache=True)(fn) for name, fn in _LOOP_KERNELS.items()}


NUMBA_KERNELS = None
if os.environ.get("VERIVQE_DISABLE_NUMBA", "").lower() not in ("1", "true", "yes"):
    try:
        NUMBA_KERNELS = _build_numba_kernels()
    except Exception:  # pragma: no cover - numba install problems
        NUMBA_KERNELS = None

ACTIVE = NUMBA_KERNELS if NUMBA_KERNELS is not None else NUMPY_KERNELS
BACKEND = "numba" if NUMBA_KERNELS is not None else "numpy"

apply_1q = ACTIVE["apply_1q"]
apply_cz = ACTIVE["apply_cz"]
apply_cnot = ACTIVE["apply_cnot"]
append_qubit = ACTIVE["append_qubit"]
measure_xy_remove = ACTIVE["measure_xy_remove"]


def backend_name() -> str:
    return BACKEND

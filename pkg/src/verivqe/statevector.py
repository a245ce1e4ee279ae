"""Dense statevector engine for small registers.

Conventions, fixed so golden values stay portable:

* qubit 0 is the MOST significant bit of the basis index, so on two qubits
  the basis order is |00>, |01>, |10>, |11> with qubit 0 listed first;
* rotation gates use the physics convention R_a(t) = exp(-i t a / 2);
* the register never exceeds 10 qubits (dense amplitudes only).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel

MAX_QUBITS = 10
ROTATION_KINDS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATION_KINDS + ("H", "CZ", "CNOT")
_TWO_QUBIT = ("CZ", "CNOT")

_NORM_TOL = 1e-10


@dataclass(frozen=True)
class Gate:
    """One gate application: kind, target qubits, optional rotation angle."""

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        want = 2 if self.kind in _TWO_QUBIT else 1
        if len(targets) != want:
            raise ValueError(f"{self.kind} expects {want} target(s), got {targets}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate targets {targets}")
        if any(t < 0 for t in targets):
            raise ValueError(f"negative target in {targets}")
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")


class StateVector:
    """Normalized pure state on ``num_qubits`` qubits."""

    __slots__ = ("amplitudes", "num_qubits")

    def __init__(self, amplitudes):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be a 1-D vector")
        n = int(amps.shape[0]).bit_length() - 1
        if amps.shape[0] != 1 << n or n < 1:
            raise ValueError(f"length {amps.shape[0]} is not 2**n for n >= 1")
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")
        norm = float(np.sum(amps.real**2 + amps.imag**2))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {_NORM_TOL}")
        self.amplitudes = amps
        self.num_qubits = n

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        """The all-zeros computational basis state |0...0>."""
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps)

    def copy(self) -> "StateVector":
        out = object.__new__(StateVector)
        out.amplitudes = self.amplitudes.copy()
        out.num_qubits = self.num_qubits
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.amplitudes.real**2 + self.amplitudes.imag**2)))


def _rotation_matrix(kind: str, angle: float):
    c = np.cos(angle / 2.0)
    s = np.sin(angle / 2.0)
    if kind == "RX":
        return c, -1j * s, -1j * s, c
    if kind == "RY":
        return c, -s, s, c
    # RZ
    return np.exp(-1j * angle / 2.0), 0.0, 0.0, np.exp(1j * angle / 2.0)


_H = (1 / np.sqrt(2), 1 / np.sqrt(2), 1 / np.sqrt(2), -1 / np.sqrt(2))


def _bit_of(qubit: int, num_qubits: int) -> int:
    # qubit 0 = MSB, so its bit position from the LSB is num_qubits-1
    return num_qubits - 1 - qubit


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply a gate, returning a new state. Input state is untouched."""
    n = state.num_qubits
    if any(t >= n for t in gate.targets):
        raise ValueError(f"gate targets {gate.targets} out of range for {n} qubits")
    out = state.amplitudes.copy()
    if gate.kind in ROTATION_KINDS:
        m = _rotation_matrix(gate.kind, gate.angle)
        _accel.apply_1q(out, _bit_of(gate.targets[0], n), *m)
    elif gate.kind == "H":
        _accel.apply_1q(out, _bit_of(gate.targets[0], n), *_H)
    elif gate.kind == "CZ":
        _accel.apply_cz(out, _bit_of(gate.targets[0], n), _bit_of(gate.targets[1], n))
    else:  # CNOT
        _accel.apply_cnot(out, _bit_of(gate.targets[0], n), _bit_of(gate.targets[1], n))
    result = object.__new__(StateVector)
    result.amplitudes = out
    result.num_qubits = n
    return result


def apply_circuit(state: StateVector, gates) -> StateVector:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


_PAULI_MATS = {
    "X": (0.0, 1.0, 1.0, 0.0),
    "Y": (0.0, -1j, 1j, 0.0),
    "Z": (1.0, 0.0, 0.0, -1.0),
}


def pauli_expectation(state: StateVector, pauli) -> float:
    """Exact <state| P |state> for a Pauli string (qubit 0 first)."""
    letters = str(pauli)
    if len(letters) != state.num_qubits:
        raise ValueError(
            f"pauli length {len(letters)} != qubit count {state.num_qubits}"
        )
    work = state.amplitudes.copy()
    n = state.num_qubits
    for q, ch in enumerate(letters):
        if ch == "I":
            continue
        _accel.apply_1q(work, _bit_of(q, n), *_PAULI_MATS[ch])
    return float(np.vdot(state.amplitudes, work).real)


def sample_pauli(state: StateVector, pauli, shots: int, rng: np.random.Generator):
    """Draw `shots` eigenvalues of the +-1 Pauli from the Born distribution."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    mu = pauli_expectation(state, pauli)
    p_plus = min(1.0, max(0.0, (1.0 + mu) / 2.0))
    draws = rng.random(shots) < p_plus
    return np.where(draws, 1, -1).astype(np.int64)


# ---------------------------------------------------------------------------
# exact ground energy (self-implemented Lanczos, no library eigensolver)
# ---------------------------------------------------------------------------


class DenseHermitian:
    """Dense Hermitian matrix used as the exact-spectrum oracle."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        m = np.asarray(entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise ValueError("matrix is not Hermitian within 1e-12")
        self.entries = m

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _tridiag_smallest(alpha, beta):
    """Smallest eigenvalue of a symmetric tridiagonal matrix via Sturm
    sequence bisection. alpha: diagonal, beta: off-diagonal (len-1)."""
    k = len(alpha)
    if k == 1:
        return float(alpha[0])
    b2 = np.concatenate([[0.0], np.square(beta)])
    pad = np.concatenate([np.abs(beta), [0.0]])
    radius = pad + np.concatenate([[0.0], np.abs(beta)])
    lo = float(np.min(alpha - radius))
    hi = float(np.max(alpha + radius))

    def count_below(x):
        # number of eigenvalues < x
        cnt = 0
        d = 1.0
        for i in range(k):
            d = alpha[i] - x - b2[i] / d
            if d == 0.0:
                d = 1e-300
            if d < 0.0:
                cnt += 1
        return cnt

    target = max(abs(lo), abs(hi), 1.0) * 1e-15
    while hi - lo > target:
        mid = 0.5 * (lo + hi)
        if count_below(mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _tridiag_eigvec(alpha, beta, lam):
    """Eigenvector of the tridiagonal matrix for eigenvalue lam by inverse
    iteration with a hand-rolled partially pivoted tridiagonal solve."""
    k = len(alpha)
    if k == 1:
        return np.array([1.0])
    y = np.full(k, 1.0 / np.sqrt(k))
    shift = lam + max(1.0, abs(lam)) * 1e-13
    for _ in range(3):
        # solve (T - shift I) v = y with partial pivoting; bandwidth grows to 2
        a = np.zeros(k)  # subdiagonal (row i, col i-1)
        b = alpha - shift  # diagonal
        c = np.zeros(k)  # superdiagonal
        c[:-1] = beta
        d = np.zeros(k)  # second superdiagonal from row swaps
        a[1:] = beta
        rhs = y.copy()
        for i in range(k - 1):
            if abs(a[i + 1]) > abs(b[i]):
                b[i], a[i + 1] = a[i + 1], b[i]
                c[i], b[i + 1] = b[i + 1], c[i]
                if i + 2 < k:
                    d[i], c[i + 1] = c[i + 1], d[i]
                rhs[i], rhs[i + 1] = rhs[i + 1], rhs[i]
            if b[i] == 0.0:
                b[i] = 1e-300
            f = a[i + 1] / b[i]
            b[i + 1] -= f * c[i]
            if i + 2 < k:
                c[i + 1] -= f * d[i]
            rhs[i + 1] -= f * rhs[i]
        v = np.zeros(k)
        if b[-1] == 0.0:
            b[-1] = 1e-300
        v[-1] = rhs[-1] / b[-1]
        if k >= 2:
            v[-2] = (rhs[-2] - c[-2] * v[-1]) / b[-2]
        for i in range(k - 3, -1, -1):
            v[i] = (rhs[i] - c[i] * v[i + 1] - d[i] * v[i + 2]) / b[i]
        y = v / np.linalg.norm(v)
    return y


def _lanczos_smallest(h, v0, max_iter):
    """One Lanczos run with full reorthogonalization.

    Returns (ritz_value, ritz_vector, residual_norm)."""
    dim = h.shape[0]
    k_max = min(dim, max_iter)
    q = np.zeros((dim, k_max), dtype=np.complex128)
    alpha = np.zeros(k_max)
    beta = np.zeros(max(k_max - 1, 1))
    v = v0 / np.linalg.norm(v0)
    q[:, 0] = v
    steps = 0
    for j in range(k_max):
        w = h @ q[:, j]
        alpha[j] = float(np.vdot(q[:, j], w).real)
        w = w - alpha[j] * q[:, j]
        if j > 0:
            w = w - beta[j - 1] * q[:, j - 1]
        # full reorthogonalization, twice for stability
        for _ in range(2):
            w = w - q[:, : j + 1] @ (q[:, : j + 1].conj().T @ w)
        steps = j + 1
        nrm = float(np.linalg.norm(w))
        if j + 1 < k_max:
            if nrm < 1e-13:
                break  # invariant subspace found
            beta[j] = nrm
            q[:, j + 1] = w / nrm
    a = alpha[:steps]
    b = beta[: max(steps - 1, 0)]
    lam = _tridiag_smallest(a, b)
    y = _tridiag_eigvec(a, b, lam)
    x = q[:, :steps] @ y.astype(np.complex128)
    x = x / np.linalg.norm(x)
    residual = float(np.linalg.norm(h @ x - lam * x))
    return lam, x, residual


def ground_energy(h) -> float:
    """Smallest eigenvalue of a Hermitian matrix, accurate to 1e-9.

    Runs Lanczos from two deterministic starting vectors and requires the
    runs to agree; disagreement triggers extra randomized restarts. The
    returned Ritz value carries a residual certificate |lam - lam_min| <=
    ||H x - lam x||.
    """
    if not isinstance(h, DenseHermitian):
        h = DenseHermitian(h)
    m = h.entries
    dim = h.dim
    if dim > 1 << MAX_QUBITS:
        raise ValueError(f"dimension {dim} exceeds 2**{MAX_QUBITS}")
    if dim == 1:
        return float(m[0, 0].real)
    results = []
    rng = np.random.default_rng(np.random.SeedSequence(0xE16))
    starts = [np.ones(dim, dtype=np.complex128)]
    starts[0][::2] += 0.5  # break symmetry of the all-ones vector
    starts.append(rng.normal(size=dim) + 1j * rng.normal(size=dim))
    max_iter = min(dim, 320)
    for attempt in range(6):
        if attempt >= len(starts):
            starts.append(rng.normal(size=dim) + 1j * rng.normal(size=dim))
        lam, _, res = _lanczos_smallest(m, starts[attempt], max_iter)
        scale = max(1.0, float(np.abs(np.diagonal(m)).max()))
        if res <= 1e-10 * scale:
            results.append(lam)
        if len(results) >= 2 and abs(results[-1] - min(results)) <= 1e-10 * scale:
            return float(min(results))
    if results:
        return float(min(results))
    raise RuntimeError("Lanczos failed to certify the ground energy")

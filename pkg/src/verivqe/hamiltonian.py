"""Pauli-string observables, TFIM construction, and shot-based cost estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevector import StateVector, pauli_expectation, sample_pauli

_LETTERS = frozenset("IXYZ")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, qubit 0 first."""

    letters: str

    def __post_init__(self):
        if not self.letters or set(self.letters) - _LETTERS:
            raise ValueError(f"invalid pauli string {self.letters!r}")

    def __str__(self) -> str:
        return self.letters

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}


class PauliObservable:
    """Weighted sum of Pauli strings.

    Duplicate strings are merged and zero-coefficient terms dropped at
    construction; the identity string is rejected (it only shifts the
    spectrum). ``one_norm`` is the sum of absolute coefficients.
    """

    __slots__ = ("terms", "num_qubits", "one_norm")

    def __init__(self, terms):
        merged: dict[str, float] = {}
        width = None
        for coeff, pauli in terms:
            ps = pauli if isinstance(pauli, PauliString) else PauliString(str(pauli))
            if ps.is_identity:
                raise ValueError("identity terms are not allowed in observables")
            if width is None:
                width = len(ps)
            elif len(ps) != width:
                raise ValueError("all terms must act on the same qubit count")
            merged[ps.letters] = merged.get(ps.letters, 0.0) + float(coeff)
        kept = tuple(
            (c, PauliString(s)) for s, c in merged.items() if c != 0.0
        )
        self.terms = kept
        self.num_qubits = width if width is not None else 0
        self.one_norm = float(sum(abs(c) for c, _ in kept))

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    def expectation(self, state: StateVector) -> float:
        return float(
            sum(c * pauli_expectation(state, p) for c, p in self.terms)
        )

    def dense_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix; used by the exact-spectrum oracle."""
        mats = {
            "I": np.eye(2, dtype=np.complex128),
            "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
            "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
        }
        dim = 1 << self.num_qubits
        total = np.zeros((dim, dim), dtype=np.complex128)
        for coeff, pauli in self.terms:
            m = np.array([[1.0 + 0j]])
            for ch in pauli.letters:  # qubit 0 first = leftmost kron factor
                m = np.kron(m, mats[ch])
            total += coeff * m
        return total

    def to_json(self) -> list:
        return [{"coeff": c, "pauli": p.letters} for c, p in self.terms]

    @classmethod
    def from_json(cls, data) -> "PauliObservable":
        return cls((item["coeff"], item["pauli"]) for item in data)


def one_norm(obs: PauliObservable) -> float:
    """Sum of absolute term coefficients."""
    return obs.one_norm


@dataclass(frozen=True)
class LatticeSpec:
    """Open-boundary rectangular lattice; sites indexed row-major."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("lattice dimensions must be positive")

    @property
    def num_sites(self) -> int:
        return self.rows * self.cols

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                i = r * self.cols + c
                if c + 1 < self.cols:
                    out.append((i, i + 1))
                if r + 1 < self.rows:
                    out.append((i, i + self.cols))
        return out


def build_tfim(lattice: LatticeSpec, h: float) -> PauliObservable:
    """Transverse-field Ising model: h * sum X_i + sum_<ij> Z_i Z_j."""
    n = lattice.num_sites
    terms = []
    if h != 0.0:
        for q in range(n):
            s = ["I"] * n
            s[q] = "X"
            terms.append((float(h), "".join(s)))
    for i, j in lattice.edges():
        s = ["I"] * n
        s[i] = "Z"
        s[j] = "Z"
        terms.append((1.0, "".join(s)))
    return PauliObservable(terms)


def shots_per_term(obs: PauliObservable, total_shots: int) -> np.ndarray:
    """Split a shot budget across terms: floor(N_s/N_o) each, remainder one
    extra shot per term in descending coefficient-magnitude order."""
    n_terms = obs.num_terms
    if total_shots < n_terms:
        raise ValueError(f"need at least {n_terms} shots, got {total_shots}")
    base = total_shots // n_terms
    alloc = np.full(n_terms, base, dtype=np.int64)
    remainder = total_shots - base * n_terms
    order = np.argsort(-np.abs(obs.coefficients()), kind="stable")
    for k in range(remainder):
        alloc[order[k]] += 1
    return alloc


@dataclass
class TermSamples:
    """Raw +-1 eigenvalue samples per term of one cost evaluation."""

    samples: list[np.ndarray]
    allocation: np.ndarray

    def cost(self, obs: PauliObservable) -> float:
        total = 0.0
        for (coeff, _), vals in zip(obs.terms, self.samples):
            total += coeff * float(vals.mean())
        return total


def sample_terms(prepare, obs: PauliObservable, shots: int,
                 rng: np.random.Generator) -> TermSamples:
    """Run the per-term sampling schedule once and keep the raw samples.

    `prepare` produces the state; each term is measured in its own run with
    its slice of the shot budget.
    """
    alloc = shots_per_term(obs, shots)
    out = []
    for (_, pauli), n in zip(obs.terms, alloc):
        state = prepare()
        out.append(sample_pauli(state, pauli, int(n), rng))
    return TermSamples(samples=out, allocation=alloc)


def estimate_cost(prepare, obs: PauliObservable, shots: int,
                  rng: np.random.Generator) -> float:
    """Unbiased shot-based estimate of sum_i c_i <P_i>."""
    return sample_terms(prepare, obs, shots, rng).cost(obs)

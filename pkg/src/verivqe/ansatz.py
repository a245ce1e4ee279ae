"""Layered hardware-efficient ansatz and the parameter-shift gradient.

Each layer applies RY(theta) on every qubit, then a CNOT chain
0->1, 1->2, ..., n-2 -> n-1. Parameters are laid out layer-major:
theta[l*n + q] rotates qubit q in layer l.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import PauliObservable
from .statevector import Gate, StateVector, apply_circuit

HALF_PI = np.pi / 2.0


@dataclass(frozen=True)
class AnsatzConfig:
    num_qubits: int
    num_layers: int

    def __post_init__(self):
        if self.num_qubits < 1 or self.num_layers < 1:
            raise ValueError("need at least one qubit and one layer")

    @property
    def num_params(self) -> int:
        return self.num_qubits * self.num_layers


def validate_params(config: AnsatzConfig, theta) -> np.ndarray:
    vec = np.asarray(theta, dtype=float)
    if vec.shape != (config.num_params,):
        raise ValueError(
            f"expected {config.num_params} parameters, got shape {vec.shape}"
        )
    return vec


@dataclass
class GradientEstimate:
    """Gradient vector plus the bookkeeping the verification layer audits."""

    values: np.ndarray
    shots_used: int
    evaluations: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.evaluations != 2 * self.values.shape[0]:
            raise ValueError("evaluations must equal 2 * num_params")

    def norm1(self) -> float:
        return float(np.abs(self.values).sum())


def build_circuit(config: AnsatzConfig, theta) -> list[Gate]:
    vec = validate_params(config, theta)
    n = config.num_qubits
    gates: list[Gate] = []
    for layer in range(config.num_layers):
        for q in range(n):
            gates.append(Gate("RY", (q,), vec[layer * n + q]))
        for q in range(n - 1):
            gates.append(Gate("CNOT", (q, q + 1)))
    return gates


def prepare_state(config: AnsatzConfig, theta) -> StateVector:
    """Ansatz state on the all-zeros input."""
    return apply_circuit(StateVector.zero(config.num_qubits), build_circuit(config, theta))


def cost_exact(config: AnsatzConfig, theta, obs: PauliObservable) -> float:
    """Exact expectation value of the observable in the ansatz state."""
    if obs.num_terms and obs.num_qubits != config.num_qubits:
        raise ValueError("observable and ansatz qubit counts differ")
    if obs.num_terms == 0:
        return 0.0
    return obs.expectation(prepare_state(config, theta))


def make_exact_evaluator(config: AnsatzConfig, obs: PauliObservable):
    return lambda theta: cost_exact(config, theta, obs)


def make_sampled_evaluator(config: AnsatzConfig, obs: PauliObservable,
                           shots: int, rng: np.random.Generator):
    from .hamiltonian import estimate_cost

    def evaluator(theta):
        return estimate_cost(lambda: prepare_state(config, theta), obs, shots, rng)

    return evaluator


def param_shift_gradient(config: AnsatzConfig, theta, evaluator,
                         shots_used: int = 0) -> GradientEstimate:
    """Parameter-shift gradient g_i = (f(theta + pi/2 e_i) - f(theta - pi/2 e_i)) / 2.

    Exactly 2 * num_params evaluator calls, in a fixed order (parameter index
    ascending, the + shift before the - shift) so that downstream round
    accounting is deterministic.
    """
    vec = validate_params(config, theta)
    n_p = config.num_params
    values = np.zeros(n_p)
    for i in range(n_p):
        plus = vec.copy()
        plus[i] += HALF_PI
        minus = vec.copy()
        minus[i] -= HALF_PI
        f_plus = evaluator(plus)
        f_minus = evaluator(minus)
        values[i] = 0.5 * (f_plus - f_minus)
    return GradientEstimate(values=values, shots_used=shots_used, evaluations=2 * n_p)


def shifted_parameter_vectors(config: AnsatzConfig, theta) -> list[np.ndarray]:
    """The 2 * num_params shifted vectors in protocol evaluation order."""
    vec = validate_params(config, theta)
    out = []
    for i in range(config.num_params):
        plus = vec.copy()
        plus[i] += HALF_PI
        minus = vec.copy()
        minus[i] -= HALF_PI
        out.append(plus)
        out.append(minus)
    return out


def gradient_from_costs(costs) -> np.ndarray:
    """Recombine per-evaluation costs (protocol order) into a gradient."""
    arr = np.asarray(costs, dtype=float)
    if arr.ndim != 1 or arr.shape[0] % 2:
        raise ValueError("need an even number of evaluation costs")
    return 0.5 * (arr[0::2] - arr[1::2])

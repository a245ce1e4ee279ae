"""Quantum execution of measurement rounds.

The RefereeEngine plays trusted physics: it holds the actual prepared
qubits and answers projective X-Y-plane measurement requests at whatever
angle the (possibly deviating) server asks for. Qubits are prepared
lazily and dropped as soon as they are measured, so the live register
stays near the wire count instead of the vertex count.
"""

from __future__ import annotations

import numpy as np

from .. import _accel
from ..attacks import deviate_measurement, round_is_attacked
from .compile import MeasurementPattern
from .graphs import OpenGraph
from .rounds import RoundDriver, RoundOutcome, RoundPlan

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class RefereeEngine:
    """Simulates one round's qubits; confined to a single round."""

    def __init__(self, graph: OpenGraph, preparations: dict[int, tuple],
                 rng: np.random.Generator):
        self.graph = graph
        self.adj = graph.neighbors()
        self.preparations = preparations
        self.rng = rng
        self.state = np.ones(1, dtype=np.complex128)
        self.pos: dict[int, int] = {}  # vertex -> bit position (from LSB)
        self.entangled: set[tuple[int, int]] = set()
        self.num_live = 0

    def _prep(self, v: int) -> None:
        if v in self.pos:
            return
        kind, value = self.preparations[v]
        if kind == "xy":
            a0 = complex(_INV_SQRT2)
            a1 = np.exp(1j * float(value)) * _INV_SQRT2
        elif kind == "comp":
            a0 = complex(1.0 - int(value))
            a1 = complex(int(value))
        else:
            raise ValueError(f"unknown preparation kind {kind!r}")
        self.state = _accel.append_qubit(self.state, a0, a1)
        self.pos[v] = self.num_live
        self.num_live += 1

    def _entangle_around(self, v: int) -> None:
        self._prep(v)
        for u in self.adj[v]:
            edge = (v, u) if v < u else (u, v)
            if edge in self.entangled:
                continue
            self._prep(u)
            _accel.apply_cz(self.state, self.pos[v], self.pos[u])
            self.entangled.add(edge)

    def measure(self, v: int, angle: float) -> int:
        """Project vertex v onto the |+_angle>/|-_angle> basis; remove it."""
        if v in self.pos and self.pos[v] is None:
            raise ValueError(f"vertex {v} already measured")
        self._entangle_around(v)
        bit_pos = self.pos[v]
        outcome, self.state = _accel.measure_xy_remove(
            self.state, bit_pos, float(angle), float(self.rng.random())
        )
        del self.pos[v]
        for u, p in self.pos.items():
            if p > bit_pos:
                self.pos[u] = p - 1
        self.num_live -= 1
        return int(outcome)

    def live_register_size(self) -> int:
        return self.num_live

    def remaining_state(self, vertices: tuple[int, ...]) -> np.ndarray:
        """State of the unmeasured vertices, ordered so vertices[0] is the
        most significant qubit."""
        for v in vertices:
            self._entangle_around(v)
        if set(self.pos) != set(vertices):
            raise ValueError("remaining register does not match the request")
        n = self.num_live
        axes = [n - 1 - self.pos[v] for v in vertices]
        return np.transpose(self.state.reshape([2] * n), axes=axes).reshape(-1)

    def apply_pauli_fix(self, v: int, x_power: int, z_power: int) -> None:
        """Undo tracked byproducts on an unmeasured vertex."""
        p = self.pos[v]
        if x_power % 2:
            _accel.apply_1q(self.state, p, 0.0, 1.0, 1.0, 0.0)
        if z_power % 2:
            _accel.apply_1q(self.state, p, 1.0, 0.0, 0.0, -1.0)


def server_execute(plan: RoundPlan, attack, rng: np.random.Generator) -> RoundOutcome:
    """Execute one full round in-process: honest physics plus the server's
    (possibly adversarial) choice of measurement angles.

    The server role receives only the graph and the per-vertex blinded
    angle; round kind and all secrets stay on the client/referee side.
    """
    driver = RoundDriver(plan)
    referee = RefereeEngine(plan.pattern.graph, plan.preparations(), rng)
    attacked = round_is_attacked(attack, rng)
    outputs = set(plan.pattern.graph.outputs)
    while not driver.done():
        v, delta = driver.next_vertex()
        role = "output" if v in outputs else "internal"
        angle = deviate_measurement(delta, attack, role, attacked)
        driver.record(v, referee.measure(v, angle))
    return driver.outcome()


def pattern_output_state(pattern: MeasurementPattern, input_bits,
                         rng: np.random.Generator) -> np.ndarray:
    """Run an unblinded pattern on a computational basis input and return
    the byproduct-corrected output state (output wire q = qubit q)."""
    graph = pattern.graph
    preparations: dict[int, tuple] = {}
    for q, v in enumerate(graph.inputs):
        preparations[v] = ("comp", int(input_bits[q]))
    for v in range(graph.num_vertices):
        preparations.setdefault(v, ("xy", 0.0))
    referee = RefereeEngine(graph, preparations, rng)
    outcomes: dict[int, int] = {}
    for v in graph.order:
        angle = pattern.adapted_angle(v, outcomes)
        outcomes[v] = referee.measure(v, angle)
    for v in graph.outputs:
        referee._entangle_around(v)
    for v in graph.outputs:
        sx, sz = pattern.byproducts(v, outcomes)
        referee.apply_pauli_fix(v, sx, sz)
    return referee.remaining_state(graph.outputs)

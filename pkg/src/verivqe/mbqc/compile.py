"""Circuit-to-pattern compilation.

Each logical qubit becomes a wire of vertices joined by edges. A J(phi) =
H Rz(phi) step is realized by measuring the current wire end in the
|+_a>/|-_a> basis with a = -phi and extending the wire by one vertex; CZ
gates become edges between wire ends. The gate set maps to J strings as

    RZ(t) -> J(t), J(0)          H -> J(0)
    RX(t) -> J(0), J(t)          CNOT(c,t) -> H(t), CZ(c,t), H(t)
    RY(t) -> RZ(-pi/2), RX(t), RZ(pi/2)

(time order, left to right). Adjacent J(0) J(0) pairs on a wire cancel
(H H = I) when nothing touches the wire in between.

Correction structure (byproduct tracking): let P(v) be the wire
predecessor of v. Measuring v reports a bit s_v; before vertex u is
measured its basis angle is adapted to (-1)^sx * a_u + pi * sz where

    sx = parity of s over x_deps(u) = {P(u)}
    sz = parity of s over z_deps(u) = {P(b) : (u, b) an edge, P(b) != u}

Unmeasured outputs carry the byproduct X^sx Z^sz, undone classically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..statevector import Gate
from .graphs import OpenGraph

TWO_PI = 2.0 * np.pi
HALF_PI = np.pi / 2.0

# readout gadget angles (gadget J basis, output measurement basis) per letter;
# I is read in the Z basis and the bit discarded
READOUT_ANGLES = {
    "Z": (0.0, 0.0),
    "I": (0.0, 0.0),
    "X": (HALF_PI, HALF_PI),
    "Y": (np.pi, HALF_PI),
}


@dataclass(frozen=True)
class MeasurementPattern:
    """Open graph plus per-vertex basis angles and correction dependencies."""

    graph: OpenGraph
    angles: dict[int, float]
    x_deps: dict[int, frozenset[int]]
    z_deps: dict[int, frozenset[int]]

    def __post_init__(self):
        rank = {v: i for i, v in enumerate(self.graph.order)}
        for v in self.graph.order:
            if v not in self.angles:
                raise ValueError(f"measured vertex {v} has no angle")
            for u in self.x_deps.get(v, ()):
                if rank.get(u, len(rank)) >= rank[v]:
                    raise ValueError(f"x-dependency {u} not earlier than {v}")
            for u in self.z_deps.get(v, ()):
                if rank.get(u, len(rank)) >= rank[v]:
                    raise ValueError(f"z-dependency {u} not earlier than {v}")

    def adapted_angle(self, v: int, outcomes: dict[int, int]) -> float:
        sx = sum(outcomes[u] for u in self.x_deps.get(v, ())) % 2
        sz = sum(outcomes[u] for u in self.z_deps.get(v, ())) % 2
        return ((-1.0) ** sx) * self.angles[v] + np.pi * sz

    def byproducts(self, v: int, outcomes: dict[int, int]) -> tuple[int, int]:
        sx = sum(outcomes[u] for u in self.x_deps.get(v, ())) % 2
        sz = sum(outcomes[u] for u in self.z_deps.get(v, ())) % 2
        return sx, sz

    def to_json(self) -> dict:
        data = self.graph.to_json()
        data["angles"] = {str(v): a for v, a in self.angles.items()}
        data["x_deps"] = {str(v): sorted(d) for v, d in self.x_deps.items()}
        data["z_deps"] = {str(v): sorted(d) for v, d in self.z_deps.items()}
        return data

    @classmethod
    def from_json(cls, data) -> "MeasurementPattern":
        return cls(
            graph=OpenGraph.from_json(data),
            angles={int(v): float(a) for v, a in data["angles"].items()},
            x_deps={int(v): frozenset(d) for v, d in data["x_deps"].items()},
            z_deps={int(v): frozenset(d) for v, d in data["z_deps"].items()},
        )


class _WireBuilder:
    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self.wire_end = list(range(num_qubits))
        self.next_vertex = num_qubits
        self.pred: dict[int, int] = {}
        self.edges: set[tuple[int, int]] = set()
        self.angles: dict[int, float] = {}
        self.order: list[int] = []

    def add_j(self, qubit: int, basis_angle: float) -> None:
        v = self.wire_end[qubit]
        w = self.next_vertex
        self.next_vertex += 1
        self.pred[w] = v
        self._toggle_edge(v, w)
        self.angles[v] = float(basis_angle) % TWO_PI
        self.order.append(v)
        self.wire_end[qubit] = w

    def add_cz(self, q1: int, q2: int) -> None:
        self._toggle_edge(self.wire_end[q1], self.wire_end[q2])

    def _toggle_edge(self, a: int, b: int) -> None:
        e = (a, b) if a < b else (b, a)
        if e in self.edges:
            self.edges.remove(e)  # CZ is an involution
        else:
            self.edges.add(e)

    def finish(self, measure_outputs: dict[int, float] | None = None) -> MeasurementPattern:
        order = list(self.order)
        if measure_outputs is not None:
            for q in range(self.num_qubits):
                v = self.wire_end[q]
                self.angles[v] = float(measure_outputs[q]) % TWO_PI
                order.append(v)
        graph = OpenGraph(
            num_vertices=self.next_vertex,
            edges=frozenset(self.edges),
            inputs=tuple(range(self.num_qubits)),
            outputs=tuple(self.wire_end),
            order=tuple(order),
        )
        x_deps: dict[int, frozenset[int]] = {}
        z_deps: dict[int, set[int]] = {v: set() for v in range(self.next_vertex)}
        for v in range(self.next_vertex):
            p = self.pred.get(v)
            x_deps[v] = frozenset() if p is None else frozenset((p,))
        for a, b in self.edges:
            pa = self.pred.get(a)
            pb = self.pred.get(b)
            if pa is not None and pa != b:
                z_deps[b].add(pa)
            if pb is not None and pb != a:
                z_deps[a].add(pb)
        return MeasurementPattern(
            graph=graph,
            angles=dict(self.angles),
            x_deps=x_deps,
            z_deps={v: frozenset(d) for v, d in z_deps.items()},
        )


def _rewrite(gates) -> list[Gate]:
    """Reduce the gate set to {RZ, RX, H, CZ, CNOT}."""
    out: list[Gate] = []
    for g in gates:
        if g.kind == "RY":
            q = g.targets
            out.append(Gate("RZ", q, -HALF_PI))
            out.append(Gate("RX", q, g.angle))
            out.append(Gate("RZ", q, HALF_PI))
        else:
            out.append(g)
    return out


_J_STRINGS = {
    # gate kind -> J phi values in time order (basis angle is -phi)
    "RZ": lambda t: (t, 0.0),
    "RX": lambda t: (0.0, t),
    "H": lambda t: (0.0,),
}


def _plan_ops(gates, num_qubits: int) -> list[tuple]:
    """Expand gates into ('J', q, basis) / ('CZ', q1, q2) ops. Adjacent
    J(0) J(0) pairs arising inside one gate's own rewrite cancel (H H = I);
    gadgets from distinct gates are kept so the pattern mirrors the circuit."""
    ops: list[tuple] = []
    for g in gates:
        if g.kind == "CNOT":
            c, t = g.targets
            ops.append(("J", t, 0.0))
            ops.append(("CZ", c, t))
            ops.append(("J", t, 0.0))
        elif g.kind == "CZ":
            ops.append(("CZ", *g.targets))
        else:
            q = g.targets[0]
            phis: list[float] = []
            for primitive in _rewrite([g]):
                for phi in _J_STRINGS[primitive.kind](
                        primitive.angle if primitive.angle is not None else 0.0):
                    if phi == 0.0 and phis and phis[-1] == 0.0:
                        phis.pop()
                    else:
                        phis.append(phi)
            for phi in phis:
                ops.append(("J", q, -phi))
    return ops


def _checked(gates, num_qubits: int):
    for g in gates:
        if any(t >= num_qubits for t in g.targets):
            raise ValueError(f"gate {g} out of range for {num_qubits} qubits")
    return gates


def circuit_to_pattern(gates, num_qubits: int) -> MeasurementPattern:
    """Compile a circuit to a pattern whose outputs stay unmeasured.

    Executing the pattern with the input vertices prepared in a product
    state |x> reproduces the circuit acting on |x>.
    """
    builder = _WireBuilder(num_qubits)
    for op in _plan_ops(_checked(gates, num_qubits), num_qubits):
        if op[0] == "J":
            builder.add_j(op[1], op[2])
        else:
            builder.add_cz(op[1], op[2])
    return builder.finish(measure_outputs=None)


def sampling_pattern(gates, num_qubits: int, pauli) -> MeasurementPattern:
    """Compile circuit + readout for one Pauli string; every vertex measured.

    A per-wire H is prepended so that |+>-type input preparations realize
    the circuit on |0...0>. Each wire gains one readout gadget vertex; the
    gadget and output basis angles select which Pauli letter is sampled,
    so the graph is identical for every string of the same width.
    """
    letters = str(pauli)
    if len(letters) != num_qubits:
        raise ValueError("pauli width must match qubit count")
    builder = _WireBuilder(num_qubits)
    prefixed = [Gate("H", (q,)) for q in range(num_qubits)]
    for op in _plan_ops(_checked(list(prefixed) + list(gates), num_qubits), num_qubits):
        if op[0] == "J":
            builder.add_j(op[1], op[2])
        else:
            builder.add_cz(op[1], op[2])
    output_angles = {}
    for q, ch in enumerate(letters):
        gadget, readout = READOUT_ANGLES[ch]
        builder.add_j(q, gadget)
        output_angles[q] = readout
    return builder.finish(measure_outputs=output_angles)


def eigenvalue_from_bits(letters: str, output_bits: dict[int, int],
                         outputs: tuple[int, ...]) -> int:
    """Pauli eigenvalue from decoded output bits: product of (1 - 2 b) over
    the non-identity letters."""
    value = 1
    for q, ch in enumerate(str(letters)):
        if ch == "I":
            continue
        value *= 1 - 2 * output_bits[outputs[q]]
    return value

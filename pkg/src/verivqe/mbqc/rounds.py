"""Blinded computation rounds and trap/dummy test rounds.

The client's per-round secrets live in a RoundPlan; the RoundDriver turns a
plan into the turn-based sequence of transmitted measurement angles. The
server side only ever sees those angles and the raw outcome bits.

Blinding: every computation vertex is prepared as |+_theta> with theta
drawn from {k pi/4, k=0..7}; the transmitted angle is

    delta = phi' + theta + r * pi   (mod 2 pi)

with phi' the correction-adapted pattern angle and r a uniform bit, so the
reported outcome m decodes to the true bit b = m XOR r. Test rounds prepare
one color class as traps |+_theta> measured at theta + r*pi and everything
else as computational dummies |0>/|1>; a trap's honest outcome is then
r XOR parity(neighboring dummy bits) exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compile import MeasurementPattern, TWO_PI
from .graphs import Coloring

ANGLE_STEP = np.pi / 4.0  # 8-value blinding alphabet


def _eight(rng: np.random.Generator) -> float:
    return float(rng.integers(0, 8)) * ANGLE_STEP


@dataclass(frozen=True)
class RoundPlan:
    """Everything the client needs to delegate one round."""

    kind: str  # "computation" | "test"
    pattern: MeasurementPattern
    theta: dict[int, float]
    r_bits: dict[int, int]
    trap_class: int | None = None
    traps: frozenset[int] = frozenset()
    dummies: dict[int, int] = field(default_factory=dict)
    dummy_angles: dict[int, float] = field(default_factory=dict)

    def preparations(self) -> dict[int, tuple]:
        """Secret per-vertex preparations handed to the referee."""
        if self.kind == "computation":
            return {v: ("xy", self.theta[v]) for v in range(self.pattern.graph.num_vertices)}
        preps: dict[int, tuple] = {}
        for v in self.traps:
            preps[v] = ("xy", self.theta[v])
        for v, bit in self.dummies.items():
            preps[v] = ("comp", bit)
        return preps


@dataclass
class RoundOutcome:
    """Raw reported bits plus the client-side decode of one round."""

    bits: dict[int, int]
    deltas: dict[int, float]
    decoded: dict[int, int] = field(default_factory=dict)
    trap_verdicts: dict[int, bool] | None = None


def make_computation_round(pattern: MeasurementPattern, rng: np.random.Generator,
                           force_theta: dict | None = None,
                           force_r: dict | None = None) -> RoundPlan:
    """Fresh one-time-pad blinding for every measured vertex."""
    order = pattern.graph.order
    if len(order) != pattern.graph.num_vertices:
        raise ValueError("computation rounds need fully measured patterns")
    theta = {}
    r_bits = {}
    for v in order:
        theta[v] = _eight(rng) if force_theta is None else float(force_theta[v])
        r_bits[v] = int(rng.integers(0, 2)) if force_r is None else int(force_r[v])
    return RoundPlan(kind="computation", pattern=pattern, theta=theta, r_bits=r_bits)


def make_test_round(pattern: MeasurementPattern, coloring: Coloring,
                    rng: np.random.Generator,
                    force_class: int | None = None) -> RoundPlan:
    """Traps on one uniformly chosen color class, dummies everywhere else."""
    graph = pattern.graph
    coloring.validate(graph)
    if force_class is None:
        trap_class = int(rng.integers(0, coloring.num_colors))
    else:
        trap_class = int(force_class)
    traps = frozenset(coloring.class_vertices(trap_class))
    theta = {}
    r_bits = {}
    dummies = {}
    dummy_angles = {}
    for v in graph.order:
        if v in traps:
            theta[v] = _eight(rng)
            r_bits[v] = int(rng.integers(0, 2))
        else:
            dummies[v] = int(rng.integers(0, 2))
            dummy_angles[v] = _eight(rng)
    return RoundPlan(
        kind="test",
        pattern=pattern,
        theta=theta,
        r_bits=r_bits,
        trap_class=trap_class,
        traps=traps,
        dummies=dummies,
        dummy_angles=dummy_angles,
    )


class RoundDriver:
    """Client-side state machine emitting blinded angles vertex by vertex."""

    def __init__(self, plan: RoundPlan):
        self.plan = plan
        self.order = plan.pattern.graph.order
        self.position = 0
        self.true_bits: dict[int, int] = {}
        self.raw_bits: dict[int, int] = {}
        self.deltas: dict[int, float] = {}

    def done(self) -> bool:
        return self.position >= len(self.order)

    def next_vertex(self) -> tuple[int, float]:
        v = self.order[self.position]
        plan = self.plan
        if plan.kind == "computation":
            adapted = plan.pattern.adapted_angle(v, self.true_bits)
            delta = (adapted + plan.theta[v] + plan.r_bits[v] * np.pi) % TWO_PI
        elif v in plan.traps:
            delta = (plan.theta[v] + plan.r_bits[v] * np.pi) % TWO_PI
        else:
            delta = plan.dummy_angles[v] % TWO_PI
        self.deltas[v] = delta
        return v, delta

    def record(self, v: int, reported_bit: int) -> None:
        if v != self.order[self.position]:
            raise ValueError("out-of-order measurement report")
        bit = int(reported_bit)
        self.raw_bits[v] = bit
        if self.plan.kind == "computation" or v in self.plan.traps:
            self.true_bits[v] = bit ^ self.plan.r_bits[v]
        else:
            self.true_bits[v] = bit
        self.position += 1

    def outcome(self) -> RoundOutcome:
        if not self.done():
            raise ValueError("round is not finished")
        out = RoundOutcome(bits=dict(self.raw_bits), deltas=dict(self.deltas))
        if self.plan.kind == "computation":
            out.decoded = dict(self.true_bits)
        else:
            out.trap_verdicts = client_verify_test(self.plan, out)
        return out


def client_verify_test(plan: RoundPlan, outcome: RoundOutcome) -> dict[int, bool]:
    """Per-trap verdicts: trap v passes iff its reported bit equals
    r_v XOR parity of the neighboring dummy bits."""
    if plan.kind != "test":
        raise ValueError("verification applies to test rounds only")
    adj = plan.pattern.graph.neighbors()
    verdicts = {}
    for v in sorted(plan.traps):
        parity = sum(plan.dummies[u] for u in adj[v]) % 2
        expected = plan.r_bits[v] ^ parity
        verdicts[v] = outcome.bits[v] == expected
    return verdicts

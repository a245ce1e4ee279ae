"""Server and referee roles.

The referee is trusted physics: it receives the client's secret per-vertex
preparations and answers measurement requests with honest Born-rule bits.
The server is the untrusted delegate: it sees the public graph, relays
blinded measurement angles (possibly deviating per its attack spec), and
reports raw outcome bits. Server state never contains round kinds or
preparation secrets.
"""

from __future__ import annotations

import numpy as np

from ..attacks import AttackSpec, NoAttack, deviate_measurement, round_is_attacked
from ..mbqc.execute import RefereeEngine
from ..mbqc.graphs import OpenGraph
from .messages import ProtocolViolation


class RefereeParty:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.graph: OpenGraph | None = None
        self.engines: dict[int, RefereeEngine] = {}
        self.measured_counts: dict[int, int] = {}

    def session_init(self, graph_json: dict) -> None:
        self.graph = OpenGraph.from_json(graph_json)
        self.engines.clear()
        self.measured_counts.clear()

    def prepare_batch(self, round_id: int, preparations: dict) -> None:
        if self.graph is None:
            raise ProtocolViolation("prepare_batch before session_init")
        preps = {int(v): (spec[0], spec[1]) for v, spec in preparations.items()}
        self.engines[round_id] = RefereeEngine(self.graph, preps, self.rng)
        self.measured_counts[round_id] = 0

    def measure(self, round_id: int, vertex: int, angle: float) -> int:
        engine = self.engines.get(round_id)
        if engine is None:
            raise ProtocolViolation(f"no prepared round {round_id}")
        bit = engine.measure(int(vertex), float(angle))
        self.measured_counts[round_id] += 1
        if self.measured_counts[round_id] == len(self.graph.order):
            del self.engines[round_id]  # round done, free the register
            del self.measured_counts[round_id]
        return bit


class ServerParty:
    """Applies its attack spec obliviously: the deviation path sees only the
    blinded angle and the public vertex role."""

    def __init__(self, attack: AttackSpec | None, rng: np.random.Generator,
                 record_log: bool = False):
        self.attack = attack if attack is not None else NoAttack()
        self.rng = rng
        self.record_log = record_log
        self.log: list[dict] = []
        self.output_vertices: frozenset[int] = frozenset()
        self.round_order_len = 0
        self.round_attacked: dict[int, bool] = {}
        self.round_bits: dict[int, list[int]] = {}

    def _log(self, direction: str, msg: dict) -> None:
        if self.record_log:
            self.log.append({"dir": direction, **msg})

    def session_init(self, graph_json: dict) -> None:
        self._log("in", {"type": "session_init", "graph": graph_json,
                         "angle_alphabet": 8})
        self.output_vertices = frozenset(graph_json["outputs"])
        self.round_order_len = len(graph_json["order"])
        self.round_attacked.clear()
        self.round_bits.clear()

    def angle(self, round_id: int, vertex: int, angle: float, referee_measure) -> int:
        self._log("in", {"type": "angle", "round_id": round_id,
                         "vertex": vertex, "angle": angle})
        if round_id not in self.round_attacked:
            self.round_attacked[round_id] = round_is_attacked(self.attack, self.rng)
            self.round_bits[round_id] = []
        role = "output" if vertex in self.output_vertices else "internal"
        measured_angle = deviate_measurement(
            float(angle), self.attack, role, self.round_attacked[round_id]
        )
        self._log("out", {"type": "measure_request", "round_id": round_id,
                          "vertex": vertex, "angle": measured_angle})
        bit = int(referee_measure(round_id, vertex, measured_angle))
        self._log("in", {"type": "measure_result", "round_id": round_id,
                         "vertex": vertex, "bit": bit})
        self.round_bits[round_id].append(bit)
        self._log("out", {"type": "vertex_result", "round_id": round_id,
                          "vertex": vertex, "bit": bit})
        return bit

    def round_report(self, round_id: int) -> list[int]:
        self._log("in", {"type": "report_request", "round_id": round_id})
        bits = self.round_bits.pop(round_id, [])
        self.round_attacked.pop(round_id, None)
        self._log("out", {"type": "round_report", "round_id": round_id,
                          "bits": list(bits)})
        return list(bits)

    def step_verdict(self, verdict: str) -> None:
        self._log("in", {"type": "step_verdict", "verdict": verdict})
        # an aborted step cancels any half-finished rounds
        self.round_bits.clear()
        self.round_attacked.clear()

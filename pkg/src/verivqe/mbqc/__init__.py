from .graphs import Coloring, OpenGraph, greedy_coloring
from .compile import MeasurementPattern, circuit_to_pattern, sampling_pattern
from .rounds import (
    RoundOutcome,
    RoundPlan,
    client_verify_test,
    make_computation_round,
    make_test_round,
)
from .execute import RefereeEngine, pattern_output_state, server_execute

__all__ = [
    "Coloring",
    "OpenGraph",
    "greedy_coloring",
    "MeasurementPattern",
    "circuit_to_pattern",
    "sampling_pattern",
    "RoundOutcome",
    "RoundPlan",
    "client_verify_test",
    "make_computation_round",
    "make_test_round",
    "RefereeEngine",
    "pattern_output_state",
    "server_execute",
]

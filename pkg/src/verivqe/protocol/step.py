"""One verifiable delegated gradient step.

A step delegates all 2 * N_P shifted cost evaluations of the parameter
shift rule, each split into per-term sampling rounds, interleaved at a
uniformly random position with t test rounds. The step aborts on the first
trap failure; with zero failures the decoded samples recombine into the
gradient estimate. A diagnostic observe mode completes every round and
counts trap failures without aborting (used by the error-vs-detections
experiments).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ansatz import (
    AnsatzConfig,
    GradientEstimate,
    build_circuit,
    gradient_from_costs,
    shifted_parameter_vectors,
)
from ..hamiltonian import PauliObservable, shots_per_term
from ..mbqc.compile import eigenvalue_from_bits, sampling_pattern
from ..mbqc.graphs import greedy_coloring
from ..mbqc.rounds import RoundDriver, make_computation_round, make_test_round
from ..verification import StepBudget
from .messages import canonical_json

TEST_SLOT = (-1, -1, -1)


@dataclass(frozen=True)
class StepProblem:
    config: AnsatzConfig
    observable: PauliObservable
    theta: tuple[float, ...]

    @classmethod
    def make(cls, config, observable, theta) -> "StepProblem":
        return cls(config=config, observable=observable,
                   theta=tuple(float(x) for x in theta))


@dataclass
class StepRecord:
    """Client-side decoded transcript of one step (for determinism and
    blindness checks)."""

    schedule: list[tuple[int, int, int]]
    rounds: list[dict] = field(default_factory=list)

    def canonical(self) -> str:
        return canonical_json({"schedule": self.schedule, "rounds": self.rounds})


@dataclass
class StepOutcome:
    verdict: str  # "accept" | "abort"
    gradient: GradientEstimate | None
    first_failure_round: int | None
    trap_failures: int
    rounds_executed: int
    test_rounds_run: int
    record: StepRecord | None = None

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"


def build_schedule(budget: StepBudget, observable: PauliObservable,
                   rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """Random interleaving of computation slots (eval, term, shot) and test
    slots; exactly d computation entries covering every pair once."""
    alloc = shots_per_term(observable, budget.shots_per_eval)
    slots: list[tuple[int, int, int]] = []
    for ev in range(2 * budget.num_params):
        for term_idx, n_shots in enumerate(alloc):
            for shot in range(int(n_shots)):
                slots.append((ev, term_idx, shot))
    assert len(slots) == budget.computation_rounds
    slots.extend([TEST_SLOT] * budget.test_rounds)
    perm = rng.permutation(len(slots))
    return [slots[i] for i in perm]


def build_step_patterns(problem: StepProblem, budget: StepBudget):
    """One sampling pattern per (evaluation, term); identical graphs."""
    config = problem.config
    obs = problem.observable
    if budget.num_params != config.num_params:
        raise ValueError("budget and ansatz disagree on the parameter count")
    shifted = shifted_parameter_vectors(config, np.asarray(problem.theta))
    patterns = []
    graph = None
    for vec in shifted:
        circuit = build_circuit(config, vec)
        per_term = []
        for _, pauli in obs.terms:
            pat = sampling_pattern(circuit, config.num_qubits, pauli.letters)
            if graph is None:
                graph = pat.graph
            elif pat.graph != graph:
                raise AssertionError("sampling patterns must share one graph")
            per_term.append(pat)
        patterns.append(per_term)
    return patterns, graph


def run_step(problem: StepProblem, budget: StepBudget, transport,
             rng: np.random.Generator, *, enforce_abort: bool = True,
             keep_record: bool = False) -> StepOutcome:
    """Protocol: delegate the scheduled rounds, verify traps, decode.

    `transport` supplies the (possibly adversarial) server and the trusted
    referee; `rng` is the client's randomness (schedule, blinding, trap
    placement). Transport failures raise, they are not Abort verdicts.
    """
    obs = problem.observable
    patterns, graph = build_step_patterns(problem, budget)
    coloring = greedy_coloring(graph)
    if coloring.num_colors != budget.colors:
        raise ValueError(
            f"budget says {budget.colors} colors, graph needs {coloring.num_colors}"
        )
    schedule = build_schedule(budget, obs, rng)
    record = StepRecord(schedule=schedule) if keep_record else None

    session = transport.open_session(graph.to_json())
    samples: list[list[list[int]]] = [
        [[] for _ in range(obs.num_terms)] for _ in range(2 * budget.num_params)
    ]
    trap_failures = 0
    first_failure = None
    test_rounds_run = 0
    rounds_executed = 0
    aborted = False

    for round_id, slot in enumerate(schedule):
        is_test = slot == TEST_SLOT
        if is_test:
            plan = make_test_round(patterns[0][0], coloring, rng)
        else:
            ev, term_idx, _ = slot
            plan = make_computation_round(patterns[ev][term_idx], rng)
        session.begin_round(round_id, _preparations_json(plan))
        driver = RoundDriver(plan)
        while not driver.done():
            vertex, delta = driver.next_vertex()
            bit = session.measure(round_id, vertex, delta)
            driver.record(vertex, bit)
        reported = session.finish_round(round_id)
        outcome = driver.outcome()
        if reported != [outcome.bits[v] for v in graph.order]:
            raise AssertionError("round report disagrees with per-vertex bits")
        rounds_executed += 1
        if record is not None:
            record.rounds.append({
                "round_id": round_id,
                "kind": plan.kind,
                "deltas": [outcome.deltas[v] for v in graph.order],
                "bits": [outcome.bits[v] for v in graph.order],
            })
        if is_test:
            test_rounds_run += 1
            failures = sum(1 for ok in outcome.trap_verdicts.values() if not ok)
            if failures:
                trap_failures += failures
                if first_failure is None:
                    first_failure = round_id
                if enforce_abort:
                    aborted = True
                    break  # remaining rounds are cancelled
        else:
            ev, term_idx, _ = slot
            letters = obs.terms[term_idx][1].letters
            lam = eigenvalue_from_bits(letters, outcome.decoded, graph.outputs)
            samples[ev][term_idx].append(lam)

    if aborted or (enforce_abort and trap_failures):
        session.send_verdict("abort")
        session.close()
        return StepOutcome(verdict="abort", gradient=None,
                           first_failure_round=first_failure,
                           trap_failures=trap_failures,
                           rounds_executed=rounds_executed,
                           test_rounds_run=test_rounds_run, record=record)

    coeffs = obs.coefficients()
    costs = []
    for ev in range(2 * budget.num_params):
        total = 0.0
        for term_idx in range(obs.num_terms):
            vals = samples[ev][term_idx]
            total += coeffs[term_idx] * (sum(vals) / len(vals))
        costs.append(total)
    gradient = GradientEstimate(values=gradient_from_costs(costs),
                                shots_used=budget.computation_rounds,
                                evaluations=2 * budget.num_params)
    session.send_verdict("accept")
    session.close()
    return StepOutcome(verdict="accept", gradient=gradient,
                       first_failure_round=first_failure,
                       trap_failures=trap_failures,
                       rounds_executed=rounds_executed,
                       test_rounds_run=test_rounds_run, record=record)


def _preparations_json(plan) -> dict:
    return {str(v): list(spec) for v, spec in plan.preparations().items()}

"""Rerun-on-abort gradient descent with a final convergence verdict.

Each optimization step delegates one verifiable gradient computation. An
aborted step leaves the parameters untouched and is re-run (up to a cap:
the unbounded loop of the plain protocol would livelock under a
total-corruption adversary). After the loop the run itself is accepted
only if the recent accepted steps look converged: small mean gradient
1-norm and a cost estimate sequence that is non-increasing up to twice the
shot-noise scale.

Two step engines exist: the abstract engine (sampled gradients, attacks as
direct gradient perturbations, detection idealized as a relative-error
check) for full-size optimization runs, and the MBQC engine (full blinded
delegation through a transport) for desk-scale problems.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..ansatz import (
    AnsatzConfig,
    cost_exact,
    make_exact_evaluator,
    make_sampled_evaluator,
    param_shift_gradient,
    prepare_state,
    validate_params,
)
from ..attacks import GradientPerturb, NoAttack, perturb_gradient
from ..hamiltonian import PauliObservable, estimate_cost, shots_per_term
from ..verification import StepBudget, estimate_shot_noise_sigma
from .step import StepOutcome, StepProblem, run_step


@dataclass(frozen=True)
class RunConfig:
    theta0: tuple[float, ...]
    n_iter: int
    learning_rate: float
    error_threshold: float
    shots: int
    max_reruns_per_step: int = 25
    window: int = 10
    tol_g: float = 0.5
    grad_norm_floor: float | None = None  # eps0, for the vanishing-gradient warning
    global_round_budget: int | None = None

    def __post_init__(self):
        if self.n_iter < 0 or self.max_reruns_per_step < 1:
            raise ValueError("n_iter must be >= 0 and max_reruns >= 1")
        if min(self.learning_rate, self.shots, self.window, self.tol_g) <= 0:
            raise ValueError("rate, shots, window and tol_g must be positive")


@dataclass
class StepLog:
    step: int
    reruns: int
    verdict: str
    f_hat: float
    f_exact: float
    grad_norm1: float
    trap_failures: int
    grad_below_floor: bool

    def to_json(self) -> dict:
        return {
            "step": self.step, "reruns": self.reruns, "verdict": self.verdict,
            "f_hat": self.f_hat, "f_exact": self.f_exact,
            "grad_norm1": self.grad_norm1, "trap_failures": self.trap_failures,
            "grad_below_floor": self.grad_below_floor,
        }


@dataclass
class RunTranscript:
    steps: list[StepLog] = field(default_factory=list)
    final_verdict: str = "abort"
    final_estimate: float | None = None
    theta_final: tuple[float, ...] = ()
    abort_reason: str | None = None

    def accepted_steps(self) -> list[StepLog]:
        return [s for s in self.steps if s.verdict == "accept"]

    def to_jsonl(self) -> str:
        lines = [json.dumps(s.to_json(), sort_keys=True) for s in self.steps]
        lines.append(json.dumps({
            "final_verdict": self.final_verdict,
            "final_estimate": self.final_estimate,
            "abort_reason": self.abort_reason,
            "theta_final": list(self.theta_final),
        }, sort_keys=True))
        return "\n".join(lines) + "\n"


def convergence_check(window_logs, tol_g: float, sigma_f: float) -> bool:
    """Accept iff the window's mean accepted gradient 1-norm is within
    tol_g and the cost estimates are non-increasing within 2 sigma."""
    if not window_logs:
        return False
    norms = [s.grad_norm1 for s in window_logs]
    if float(np.mean(norms)) > tol_g:
        return False
    f_hats = [s.f_hat for s in window_logs]
    slack = 2.0 * sigma_f
    return all(f_hats[i + 1] <= f_hats[i] + slack for i in range(len(f_hats) - 1))


class AbstractStepEngine:
    """Simulation shortcut for full-size optimization runs: honest sampled
    gradients, the attack applied as a direct perturbation, and trap
    detection idealized as a relative-error threshold test (a detector with
    enough test rounds catches exactly the steps whose delivered gradient
    strays beyond the threshold)."""

    def __init__(self, config: AnsatzConfig, observable: PauliObservable,
                 shots: int, attack, error_threshold: float,
                 verify: bool = True):
        self.config = config
        self.observable = observable
        self.shots = shots
        self.attack = attack if attack is not None else NoAttack()
        self.error_threshold = error_threshold
        self.verify = verify

    @property
    def rounds_per_attempt(self) -> int:
        return 2 * self.config.num_params * self.shots

    def __call__(self, theta, rng) -> StepOutcome:
        evaluator = make_sampled_evaluator(self.config, self.observable,
                                           self.shots, rng)
        honest = param_shift_gradient(self.config, theta, evaluator,
                                      shots_used=self.rounds_per_attempt)
        if isinstance(self.attack, GradientPerturb):
            delivered = perturb_gradient(honest, self.attack, rng)
        else:
            delivered = honest
        detections = 0
        if self.verify:
            denom = max(honest.norm1(), 1e-300)
            rel_err = float(np.abs(delivered.values - honest.values).sum()) / denom
            if rel_err > self.error_threshold:
                detections = 1
        if detections:
            return StepOutcome(verdict="abort", gradient=None,
                               first_failure_round=None, trap_failures=detections,
                               rounds_executed=self.rounds_per_attempt,
                               test_rounds_run=0)
        return StepOutcome(verdict="accept", gradient=delivered,
                           first_failure_round=None, trap_failures=0,
                           rounds_executed=self.rounds_per_attempt,
                           test_rounds_run=0)


class MbqcStepEngine:
    """Full blinded delegation of every step through a transport."""

    def __init__(self, config: AnsatzConfig, observable: PauliObservable,
                 budget: StepBudget, transport):
        self.config = config
        self.observable = observable
        self.budget = budget
        self.transport = transport

    @property
    def rounds_per_attempt(self) -> int:
        return self.budget.total_rounds

    def __call__(self, theta, rng) -> StepOutcome:
        problem = StepProblem.make(self.config, self.observable, theta)
        return run_step(problem, self.budget, self.transport, rng)


def run_vqa(config: RunConfig, ansatz: AnsatzConfig,
            observable: PauliObservable, engine,
            rng: np.random.Generator) -> RunTranscript:
    """Run the full optimization; the final verdict is Accept only when the
    convergence check passes on the last accepted window."""
    theta = validate_params(ansatz, np.asarray(config.theta0, dtype=float))
    transcript = RunTranscript(theta_final=tuple(theta))
    exact_eval = make_exact_evaluator(ansatz, observable)
    sigma_f = estimate_shot_noise_sigma(
        observable.coefficients(), shots_per_term(observable, config.shots))
    rounds_spent = 0
    warned_floor = False

    for k in range(1, config.n_iter + 1):
        reruns = 0
        outcome = None
        while True:
            outcome = engine(theta, rng)
            rounds_spent += outcome.rounds_executed if outcome.rounds_executed else engine.rounds_per_attempt
            if config.global_round_budget is not None and rounds_spent > config.global_round_budget:
                transcript.final_verdict = "abort"
                transcript.abort_reason = "global round budget exhausted"
                transcript.theta_final = tuple(theta)
                return transcript
            if outcome.accepted:
                break
            reruns += 1
            if reruns >= config.max_reruns_per_step:
                transcript.final_verdict = "abort"
                transcript.abort_reason = f"step {k} exceeded {config.max_reruns_per_step} reruns"
                transcript.theta_final = tuple(theta)
                return transcript
            # aborted attempt: parameters stay untouched, re-run the step

        f_hat = estimate_cost(lambda: prepare_state(ansatz, theta),
                              observable, config.shots, rng)
        f_ex = cost_exact(ansatz, theta, observable)
        below = False
        if config.grad_norm_floor is not None:
            exact_grad = param_shift_gradient(ansatz, theta, exact_eval)
            below = exact_grad.norm1() < config.grad_norm_floor
            if below and not warned_floor:
                warnings.warn(
                    "exact gradient 1-norm fell below the assumed floor eps0; "
                    "the relative-error budget is no longer meaningful",
                    stacklevel=2,
                )
                warned_floor = True
        transcript.steps.append(StepLog(
            step=k, reruns=reruns, verdict="accept", f_hat=f_hat, f_exact=f_ex,
            grad_norm1=outcome.gradient.norm1(),
            trap_failures=outcome.trap_failures, grad_below_floor=below,
        ))
        theta = theta - config.learning_rate * outcome.gradient.values

    transcript.theta_final = tuple(theta)
    accepted = transcript.accepted_steps()
    if len(accepted) >= config.window and convergence_check(
            accepted[-config.window:], config.tol_g, sigma_f):
        transcript.final_verdict = "accept"
        transcript.final_estimate = estimate_cost(
            lambda: prepare_state(ansatz, theta), observable, config.shots, rng)
    else:
        transcript.final_verdict = "abort"
        transcript.abort_reason = "convergence check failed"
    return transcript

"""Closed-form verification and convergence analysis.

Everything here is arithmetic on the protocol's accounting quantities:

* the corrupted-round error bound: a step with delta corrupted computation
  rounds distorts the gradient's 1-norm relative error by at most
  (sum_i |c_i| / (eps0 N_s)) * delta;
* the corruption budget implied by a target error e_th:
  delta_max = e_th eps0 N_s / sum|c_i| = w d with
  w = e_th eps0 / (2 N_P sum|c_i|);
* the step failure probability bound (accept despite > delta_max
  corruptions), exponentially decaying in the round count when the
  per-round budget w exceeds the slack eps1;
* contraction analysis of gradient descent under a bounded relative
  gradient error e and shot-noise variance sigma_g^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

_WILSON_Z = 1.959963984540054  # 95% two-sided


@dataclass(frozen=True)
class StepBudget:
    """Round accounting for one delegated optimization step."""

    computation_rounds: int  # d = 2 * num_params * shots_per_eval
    test_rounds: int
    shots_per_eval: int
    num_params: int
    colors: int

    def __post_init__(self):
        if min(self.computation_rounds, self.shots_per_eval,
               self.num_params, self.colors) < 1 or self.test_rounds < 0:
            raise ValueError("budget fields must be positive (test rounds >= 0)")
        if self.computation_rounds != 2 * self.num_params * self.shots_per_eval:
            raise ValueError(
                "computation rounds must equal 2 * num_params * shots_per_eval"
            )

    @property
    def total_rounds(self) -> int:
        return self.computation_rounds + self.test_rounds


@dataclass(frozen=True)
class ErrorModel:
    """Target relative error and the analysis constants around it."""

    error_threshold: float  # e_th
    grad_norm_floor: float  # eps0, assumed lower bound on ||g||_1
    one_norm: float  # sum |c_i|
    slack: float  # eps1, splitting parameter in the failure bound

    def __post_init__(self):
        if min(self.error_threshold, self.grad_norm_floor,
               self.one_norm, self.slack) < 0.0:
            raise ValueError("error model fields must be non-negative")


@dataclass(frozen=True)
class CorruptionBudget:
    max_corrupted: float  # delta_max
    per_round: float  # w


def relative_error_bound(corrupted: float, model: ErrorModel, shots: int) -> float:
    """Gradient 1-norm relative error bound for a given corruption count."""
    if model.grad_norm_floor <= 0.0:
        raise ValueError("the gradient norm floor must be positive")
    if shots < 1:
        raise ValueError("shots must be positive")
    return model.one_norm / (model.grad_norm_floor * shots) * corrupted


def corruption_budget(model: ErrorModel, budget: StepBudget) -> CorruptionBudget:
    """Tolerated corrupted-round budget delta_max and its per-round form w."""
    if model.one_norm <= 0.0:
        raise ValueError("the observable one-norm must be positive")
    delta_max = (model.error_threshold * model.grad_norm_floor
                 * budget.shots_per_eval) / model.one_norm
    w = (model.error_threshold * model.grad_norm_floor
         / (2 * budget.num_params * model.one_norm))
    if not math.isclose(delta_max, w * budget.computation_rounds,
                        rel_tol=1e-12, abs_tol=1e-300):
        raise AssertionError("delta_max and w*d disagree")  # pragma: no cover
    return CorruptionBudget(max_corrupted=delta_max, per_round=w)


def _test_round_miss_bound(n: float, m: float, t: float, c: int,
                           eps1: float) -> float:
    """Upper bound on the probability that no trap detects anything. The
    exponent is capped against float overflow; affected values are >> 1 and
    get clamped by the caller anyway."""
    tau = t / n
    first = math.exp(min(700.0, -2.0 * eps1**2 * tau**2 * n**2 / m))
    second = math.exp(min(700.0, -(m / n - eps1) * tau * n / c))
    return first + second


def failure_probability_bound(attacked: float, budget: StepBudget,
                              model: ErrorModel,
                              per_round: float | None = None) -> float:
    """Bound on Pr[accept a step with more than delta_max corruptions].

    Case split on the attack rate against the per-round budget w: above the
    budget only the trap-miss term matters; below it the corrupted-count
    tail multiplies in. The raw expression can exceed 1, so the result is
    clamped (sound for an upper bound).
    """
    n = budget.total_rounds
    d = budget.computation_rounds
    t = budget.test_rounds
    if not 0 <= attacked <= n:
        raise ValueError("attacked rounds must lie in [0, n]")
    if attacked == 0:
        return 0.0
    w = per_round if per_round is not None else corruption_budget(model, budget).per_round
    if model.slack >= w:
        warnings.warn(
            "slack eps1 >= per-round budget w: the bound no longer decays",
            stacklevel=2,
        )
    if t == 0:
        return 1.0
    miss = _test_round_miss_bound(n, attacked, t, budget.colors, model.slack)
    if attacked >= n * w:
        raw = miss
    else:
        raw = math.exp(-(2.0 * d**2 / attacked) * (attacked / n - w) ** 2) * miss
    return min(1.0, max(0.0, raw))


class InfeasibleBudget(Exception):
    def __init__(self, target: float, searched_up_to: int):
        self.target = target
        self.searched_up_to = searched_up_to
        super().__init__(
            f"no test-round count up to {searched_up_to} pushes the "
            f"failure bound below {target}"
        )


_T_SEARCH_LIMIT = 10**7


def choose_test_rounds(target_p: float, computation_rounds: int, colors: int,
                       per_round: float, slack: float,
                       attack_fraction: float) -> int:
    """Minimal test-round count whose failure bound is <= target_p.

    Valid in the decaying regime (attack_fraction > slack); the bound is
    then non-increasing in t and a binary search applies. A final local
    walk enforces minimality even off that regime.
    """
    if not 0.0 < target_p <= 1.0:
        raise ValueError("target probability must lie in (0, 1]")

    def bound(t: int) -> float:
        n = computation_rounds + t
        m = attack_fraction * n
        if m <= 0:
            return 0.0
        if t == 0:
            return 1.0
        miss = _test_round_miss_bound(n, m, t, colors, slack)
        if m >= n * per_round:
            raw = miss
        else:
            raw = math.exp(
                -(2.0 * computation_rounds**2 / m) * (m / n - per_round) ** 2
            ) * miss
        return min(1.0, max(0.0, raw))

    if bound(0) <= target_p:
        return 0
    hi = 1
    while bound(hi) > target_p:
        hi *= 2
        if hi > _T_SEARCH_LIMIT:
            raise InfeasibleBudget(target=target_p, searched_up_to=_T_SEARCH_LIMIT)
    lo = hi // 2
    while lo < hi:
        mid = (lo + hi) // 2
        if bound(mid) <= target_p:
            hi = mid
        else:
            lo = mid + 1
    while hi > 0 and bound(hi - 1) <= target_p:
        hi -= 1
    assert bound(hi) <= target_p and (hi == 0 or bound(hi - 1) > target_p)
    return hi


@dataclass
class FailureRateEstimate:
    rate: float
    ci_low: float
    ci_high: float
    trials: int
    failures: int


def _wilson_interval(failures: int, trials: int) -> tuple[float, float]:
    z = _WILSON_Z
    phat = failures / trials
    denom = 1.0 + z**2 / trials
    center = (phat + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z**2 / (4 * trials**2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def empirical_failure_rate(budget: StepBudget, model: ErrorModel, attack,
                           trials: int, rng: np.random.Generator) -> FailureRateEstimate:
    """Monte Carlo failure rate of the abstract round model.

    Each round is attacked independently with p_attack; an attacked test
    round is detected with probability 1/colors; failure means more than
    delta_max corrupted computation rounds with zero detections. Because
    the schedule is a uniform permutation, attacked counts per round kind
    are independent binomials, which vectorizes cleanly.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    p = float(getattr(attack, "p_attack", 0.0))
    delta_max = corruption_budget(model, budget).max_corrupted
    d = budget.computation_rounds
    t = budget.test_rounds
    corrupted = rng.binomial(d, p, size=trials)
    detections = rng.binomial(t, p / budget.colors, size=trials) if t else np.zeros(trials, dtype=int)
    fails = int(np.sum((corrupted > delta_max) & (detections == 0)))
    lo, hi = _wilson_interval(fails, trials)
    return FailureRateEstimate(rate=fails / trials, ci_low=lo, ci_high=hi,
                               trials=trials, failures=fails)


# ---------------------------------------------------------------------------
# gradient-descent contraction under bounded gradient error
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceInputs:
    strong_convexity: float  # mu
    lipschitz: float  # L
    learning_rate: float  # alpha
    grad_error: float  # e, relative gradient error bound
    shot_variance: float  # sigma_g^2

    def __post_init__(self):
        if self.strong_convexity > self.lipschitz:
            raise ValueError("strong convexity cannot exceed the Lipschitz constant")
        if self.learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")
        if min(self.strong_convexity, self.grad_error, self.shot_variance) < 0.0:
            raise ValueError("inputs must be non-negative")


@dataclass
class ConvergenceReport:
    contraction: float  # gamma
    conditions_met: bool
    rate: float  # rho = 1 - gamma
    asymptotic_gap: float | None  # z_inf when conditions hold

    def iterations_for(self, initial_gap: float, eps: float) -> int:
        return iterations_needed(self.rate, initial_gap, eps)


def check_convergence_conditions(inp: ConvergenceInputs) -> ConvergenceReport:
    """Contraction factor gamma = 1 - mu a (1+e) [2 - a L (1+e)] and the two
    step-size conditions that keep it inside (0, 1)."""
    a, e = inp.learning_rate, inp.grad_error
    descent = inp.strong_convexity * a * (1 + e) * (2.0 - a * inp.lipschitz * (1 + e))
    gamma = 1.0 - descent
    cond_descent = descent < 1.0
    cond_step = a * inp.lipschitz < 2.0 / (1 + e)
    met = bool(cond_descent and cond_step)
    gap = error_neighborhood(inp) if met and gamma < 1.0 else None
    return ConvergenceReport(contraction=gamma, conditions_met=met,
                             rate=1.0 - gamma, asymptotic_gap=gap)


def error_neighborhood(inp: ConvergenceInputs) -> float:
    """Asymptotic optimality gap under shot noise:
    z_inf = a L (1+e) sigma_g^2 / (2 mu [2 - a L (1+e)])."""
    al = inp.learning_rate * inp.lipschitz * (1 + inp.grad_error)
    if al >= 2.0 or inp.strong_convexity <= 0.0:
        raise ValueError("divergent configuration: contraction is not < 1")
    return al * inp.shot_variance / (2.0 * inp.strong_convexity * (2.0 - al))


def iterations_needed(rate: float, initial_gap: float, eps: float) -> int:
    """Iterations to shrink the optimality gap to eps at contraction 1-rate."""
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    if initial_gap <= 0.0 or eps <= 0.0:
        raise ValueError("gap and eps must be positive")
    if eps >= initial_gap:
        return 0
    return max(0, math.ceil(math.log(initial_gap / eps) / rate))


def estimate_shot_noise_sigma(coefficients, shots_per_term) -> float:
    """Conservative std of a sampled cost estimate: each term mean has
    variance at most 1/shots, so var(f) <= sum c_i^2 / s_i."""
    coeffs = np.asarray(coefficients, dtype=float)
    alloc = np.asarray(shots_per_term, dtype=float)
    return float(np.sqrt(np.sum(coeffs**2 / alloc)))

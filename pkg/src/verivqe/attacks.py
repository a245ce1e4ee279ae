"""Adversary model library.

Three levels of attack are modeled, matching where an adversary can act:

* GradientPerturb: additive noise on the finished gradient vector (the
  coarse model used for full optimization runs);
* RoundCorruption: flipping sampled +-1 eigenvalues of individual
  computation rounds (the accounting model behind the error bound);
* AngleShift: shifting the measurement angles the server actually uses
  (the physical MBQC-level attack).

Deviations never receive the round kind: an attacker cannot tell test
rounds from computation rounds, only vertex roles visible in the public
graph (output vs internal).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import GradientEstimate

WORST_CASE = "worst-case"
RANDOM_FLIP = "random-flip"
UNIFORM = "uniform"
CONCENTRATED = "concentrated"
SCOPE_OUTPUT = "output-vertices"
SCOPE_ALL = "all-vertices"


@dataclass(frozen=True)
class NoAttack:
    variant: str = "none"


@dataclass(frozen=True)
class GradientPerturb:
    probability: float
    magnitude: float
    variant: str = "gradient-perturb"

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        if self.magnitude < 0.0:
            raise ValueError("magnitude must be non-negative")


@dataclass(frozen=True)
class RoundCorruption:
    p_attack: float
    mode: str = WORST_CASE
    targeting: str = UNIFORM
    variant: str = "round-corruption"

    def __post_init__(self):
        if not 0.0 <= self.p_attack <= 1.0:
            raise ValueError("p_attack must lie in [0, 1]")
        if self.mode not in (WORST_CASE, RANDOM_FLIP):
            raise ValueError(f"unknown corruption mode {self.mode!r}")
        if self.targeting not in (UNIFORM, CONCENTRATED):
            raise ValueError(f"unknown targeting {self.targeting!r}")


@dataclass(frozen=True)
class AngleShift:
    p_attack: float
    shift: float
    scope: str = SCOPE_OUTPUT
    variant: str = "angle-shift"

    def __post_init__(self):
        if not 0.0 <= self.p_attack <= 1.0:
            raise ValueError("p_attack must lie in [0, 1]")
        if self.scope not in (SCOPE_OUTPUT, SCOPE_ALL):
            raise ValueError(f"unknown scope {self.scope!r}")


AttackSpec = NoAttack | GradientPerturb | RoundCorruption | AngleShift

_VARIANTS = {
    "none": NoAttack,
    "gradient-perturb": GradientPerturb,
    "round-corruption": RoundCorruption,
    "angle-shift": AngleShift,
}


def attack_to_json(spec: AttackSpec) -> dict:
    data = {"variant": spec.variant}
    for name in spec.__dataclass_fields__:
        if name != "variant":
            data[name] = getattr(spec, name)
    return data


def attack_from_json(data: dict) -> AttackSpec:
    kind = _VARIANTS[data["variant"]]
    kwargs = {k: v for k, v in data.items() if k != "variant"}
    return kind(**kwargs)


def perturb_gradient(grad: GradientEstimate, spec: GradientPerturb,
                     rng: np.random.Generator) -> GradientEstimate:
    """With probability p add i.i.d. Uniform(-Delta, Delta) noise to every
    component; otherwise return the gradient unchanged."""
    if not isinstance(spec, GradientPerturb):
        raise ValueError("perturb_gradient needs a GradientPerturb spec")
    values = grad.values
    if rng.random() < spec.probability and spec.magnitude > 0.0:
        noise = rng.uniform(-spec.magnitude, spec.magnitude, values.shape[0])
        values = values + noise
    return GradientEstimate(values=values.copy(), shots_used=grad.shots_used,
                            evaluations=grad.evaluations)


def corrupt_sample(eigenvalue: int, mode: str,
                   rng: np.random.Generator | None = None) -> int:
    """Corrupt one +-1 eigenvalue sample. Worst case flips it (distance 2);
    random-flip flips with probability 1/2."""
    if eigenvalue not in (-1, 1):
        raise ValueError("eigenvalue must be +-1")
    if mode == WORST_CASE:
        return -eigenvalue
    if mode == RANDOM_FLIP:
        if rng is None:
            raise ValueError("random-flip needs an rng")
        return -eigenvalue if rng.random() < 0.5 else eigenvalue
    raise ValueError(f"unknown corruption mode {mode!r}")


def select_attacked_rounds(n_rounds: int, spec, rng: np.random.Generator,
                           heavy_slots=None) -> np.ndarray:
    """Indices of attacked rounds.

    Uniform targeting attacks each round independently with probability
    p_attack. Concentrated targeting draws the same attack count but spends
    it on the earliest rounds attributed to the heaviest Pauli term; this
    models a maximally informed adversary and is reported without any claim
    that the uniform-case error bound still applies.
    """
    p = getattr(spec, "p_attack", 0.0)
    mask = rng.random(n_rounds) < p
    if getattr(spec, "targeting", UNIFORM) == CONCENTRATED:
        if heavy_slots is None:
            raise ValueError("concentrated targeting needs the heavy-term slots")
        budget = int(mask.sum())
        chosen = np.asarray(sorted(heavy_slots)[:budget], dtype=np.int64)
        return chosen
    return np.flatnonzero(mask).astype(np.int64)


def round_is_attacked(spec, rng: np.random.Generator) -> bool:
    """Per-round independent attack decision for measurement-level attacks."""
    if isinstance(spec, AngleShift):
        return bool(rng.random() < spec.p_attack)
    return False


def deviate_measurement(delta: float, spec, vertex_role: str,
                        round_attacked: bool) -> float:
    """Angle the server actually measures at. Receives no information about
    the round kind, only the publicly visible vertex role."""
    if not isinstance(spec, AngleShift) or not round_attacked:
        return delta
    if spec.scope == SCOPE_ALL or vertex_role == "output":
        return delta + spec.shift
    return delta

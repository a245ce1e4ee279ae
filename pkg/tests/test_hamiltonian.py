"""TFIM construction, observable algebra, and the shot-splitting estimator."""

import numpy as np
import pytest

from verivqe.hamiltonian import (
    LatticeSpec,
    PauliObservable,
    PauliString,
    build_tfim,
    estimate_cost,
    one_norm,
    sample_terms,
    shots_per_term,
)
from verivqe.statevector import StateVector, ground_energy


def test_single_edge_no_field():
    obs = build_tfim(LatticeSpec(1, 2), 0.0)
    assert obs.num_terms == 1
    coeff, pauli = obs.terms[0]
    assert coeff == 1.0 and pauli.letters == "ZZ"


def test_2x2_term_count():
    obs = build_tfim(LatticeSpec(2, 2), 0.7)
    x_terms = [t for _, t in obs.terms if "X" in t.letters]
    zz_terms = [t for _, t in obs.terms if t.letters.count("Z") == 2]
    assert len(x_terms) == 4 and len(zz_terms) == 4


def test_2x2_one_norm():
    obs = build_tfim(LatticeSpec(2, 2), 0.2)
    assert one_norm(obs) == pytest.approx(4.8)


def test_term_count_formula():
    for rows, cols in [(1, 2), (2, 2), (2, 3), (3, 3)]:
        obs = build_tfim(LatticeSpec(rows, cols), 0.5)
        edges = rows * (cols - 1) + cols * (rows - 1)
        assert obs.num_terms == rows * cols + edges


def test_one_norm_order_invariant(rng):
    terms = [(float(rng.normal()), "".join(rng.choice(list("IXZ"), size=3)))
             for _ in range(6)]
    terms = [(c, p) for c, p in terms if set(p) != {"I"}]
    obs_a = PauliObservable(terms)
    obs_b = PauliObservable(reversed(terms))
    assert obs_a.one_norm == pytest.approx(obs_b.one_norm)


def test_duplicates_merge_and_zero_prunes():
    obs = PauliObservable([(1.0, "XZ"), (2.0, "XZ"), (0.5, "ZI"), (-0.5, "ZI")])
    assert obs.num_terms == 1
    assert obs.terms[0][0] == pytest.approx(3.0)


def test_identity_rejected():
    with pytest.raises(ValueError):
        PauliObservable([(1.0, "II")])


def test_empty_observable():
    obs = PauliObservable([])
    assert one_norm(obs) == 0.0 and obs.num_terms == 0


def test_json_round_trip():
    obs = build_tfim(LatticeSpec(1, 2), 0.2)
    again = PauliObservable.from_json(obs.to_json())
    assert again.to_json() == obs.to_json()


def test_pauli_string_validation():
    with pytest.raises(ValueError):
        PauliString("XQ")


class TestShotSplitting:
    def test_even_split(self):
        obs = build_tfim(LatticeSpec(1, 2), 0.2)  # 3 terms
        alloc = shots_per_term(obs, 300)
        assert list(alloc) == [100, 100, 100]

    def test_remainder_goes_to_heavy_terms(self):
        obs = PauliObservable([(0.1, "XI"), (2.0, "ZZ"), (0.5, "IX")])
        alloc = shots_per_term(obs, 10)
        # heaviest term (ZZ) gets the extra shot
        by_letters = dict(zip([p.letters for _, p in obs.terms], alloc))
        assert by_letters["ZZ"] == 4
        assert sum(alloc) == 10

    def test_too_few_shots(self):
        obs = build_tfim(LatticeSpec(1, 2), 0.2)
        with pytest.raises(ValueError):
            shots_per_term(obs, 2)


class TestEstimateCost:
    def test_deterministic_term(self, rng):
        obs = PauliObservable([(1.0, "Z")])
        val = estimate_cost(lambda: StateVector.zero(1), obs, 50, rng)
        assert val == pytest.approx(1.0)

    def test_ground_state_energy_estimate(self, rng):
        obs = build_tfim(LatticeSpec(2, 2), 0.2)
        dense = obs.dense_matrix()
        e0 = ground_energy(dense)
        # exact ground vector from the independent dense route
        vals, vecs = np.linalg.eigh(dense)
        ground = StateVector(vecs[:, 0])
        est = estimate_cost(lambda: ground, obs, 100_000, rng)
        assert abs(est - e0) < 0.1

    def test_one_shot_per_term_unbiased(self, rng):
        # N_s = N_o: single-shot terms, still unbiased on average
        obs = build_tfim(LatticeSpec(1, 2), 0.2)
        state = StateVector(np.array([0.6, 0.0, 0.0, 0.8], dtype=complex))
        exact = obs.expectation(state)
        reps = 10_000
        total = 0.0
        for _ in range(reps):
            total += estimate_cost(lambda: state, obs, obs.num_terms, rng)
        mean = total / reps
        # 6 sigma with sigma <= one_norm / sqrt(reps)
        assert abs(mean - exact) <= 6 * obs.one_norm / np.sqrt(reps)

    def test_large_budget_converges(self, rng):
        obs = build_tfim(LatticeSpec(1, 2), 0.2)
        state = StateVector(np.array([0.5, 0.5, 0.5, 0.5], dtype=complex))
        exact = obs.expectation(state)
        est = estimate_cost(lambda: state, obs, 1_000_000, rng)
        assert abs(est - exact) <= 0.01 * obs.one_norm

    def test_sample_terms_allocation(self, rng):
        obs = build_tfim(LatticeSpec(1, 2), 0.2)
        ts = sample_terms(lambda: StateVector.zero(2), obs, 10, rng)
        assert sum(len(s) for s in ts.samples) == 10
        assert all(set(np.unique(s)) <= {-1, 1} for s in ts.samples)

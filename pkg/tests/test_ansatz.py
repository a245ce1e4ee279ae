"""Ansatz structure, exact costs, and the parameter-shift rule against a
central finite-difference oracle."""

import numpy as np
import pytest

from verivqe.ansatz import (
    AnsatzConfig,
    GradientEstimate,
    build_circuit,
    cost_exact,
    gradient_from_costs,
    make_exact_evaluator,
    param_shift_gradient,
)
from verivqe.hamiltonian import LatticeSpec, PauliObservable, build_tfim


def finite_difference(config, theta, obs, step=1e-5):
    f = make_exact_evaluator(config, obs)
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for i in range(theta.size):
        up = theta.copy()
        up[i] += step
        dn = theta.copy()
        dn[i] -= step
        out[i] = (f(up) - f(dn)) / (2 * step)
    return out


class TestCircuit:
    def test_single_qubit_layer(self):
        gates = build_circuit(AnsatzConfig(1, 1), [0.3])
        assert len(gates) == 1 and gates[0].kind == "RY"

    def test_two_qubit_layer_structure(self):
        gates = build_circuit(AnsatzConfig(2, 1), [0.1, 0.2])
        kinds = [(g.kind, g.targets) for g in gates]
        assert kinds == [("RY", (0,)), ("RY", (1,)), ("CNOT", (0, 1))]

    def test_gate_count(self):
        gates = build_circuit(AnsatzConfig(3, 2), np.zeros(6))
        assert len(gates) == 10  # 6 RY + 4 CNOT

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            build_circuit(AnsatzConfig(2, 1), [0.1])


class TestCost:
    def test_single_qubit_cosine(self):
        cfg = AnsatzConfig(1, 1)
        obs = PauliObservable([(1.0, "Z")])
        for theta in (0.0, 0.4, 1.1, np.pi):
            assert cost_exact(cfg, [theta], obs) == pytest.approx(np.cos(theta), abs=1e-12)

    def test_zero_angles_tfim(self):
        cfg = AnsatzConfig(4, 2)
        obs = build_tfim(LatticeSpec(2, 2), 0.2)
        # |0000>: each ZZ edge gives +1, each X term gives 0
        assert cost_exact(cfg, np.zeros(8), obs) == pytest.approx(4.0, abs=1e-12)

    def test_matches_sampled_limit(self, rng):
        from verivqe.ansatz import make_sampled_evaluator

        cfg = AnsatzConfig(2, 1)
        obs = build_tfim(LatticeSpec(1, 2), 0.2)
        theta = rng.uniform(-np.pi, np.pi, 2)
        exact = cost_exact(cfg, theta, obs)
        sampled = make_sampled_evaluator(cfg, obs, 1_000_000, rng)(theta)
        assert abs(sampled - exact) <= 0.01 * obs.one_norm

    def test_two_pi_periodicity(self, rng):
        cfg = AnsatzConfig(2, 2)
        obs = build_tfim(LatticeSpec(1, 2), 0.3)
        theta = rng.uniform(-np.pi, np.pi, 4)
        base = cost_exact(cfg, theta, obs)
        for i in range(4):
            shifted = theta.copy()
            shifted[i] += 2 * np.pi
            assert cost_exact(cfg, shifted, obs) == pytest.approx(base, abs=1e-10)


class TestParamShift:
    def test_single_qubit_derivative(self):
        cfg = AnsatzConfig(1, 1)
        obs = PauliObservable([(1.0, "Z")])
        grad = param_shift_gradient(cfg, [np.pi / 2], make_exact_evaluator(cfg, obs))
        assert grad.values[0] == pytest.approx(-1.0, abs=1e-12)

    def test_evaluation_count_and_order(self):
        cfg = AnsatzConfig(2, 2)
        obs = build_tfim(LatticeSpec(1, 2), 0.2)
        calls = []
        exact = make_exact_evaluator(cfg, obs)

        def spy(theta):
            calls.append(np.array(theta))
            return exact(theta)

        grad = param_shift_gradient(cfg, np.zeros(4), spy)
        assert grad.evaluations == 8 and len(calls) == 8
        # order: parameter index ascending, + shift before - shift
        for i in range(4):
            assert calls[2 * i][i] == pytest.approx(np.pi / 2)
            assert calls[2 * i + 1][i] == pytest.approx(-np.pi / 2)

    def test_against_finite_difference_at_zero(self):
        cfg = AnsatzConfig(3, 1)
        obs = PauliObservable([(1.0, "ZZZ")])
        grad = param_shift_gradient(cfg, np.zeros(3), make_exact_evaluator(cfg, obs))
        fd = finite_difference(cfg, np.zeros(3), obs)
        assert np.abs(grad.values - fd).max() <= 1e-6

    def test_against_finite_difference_random(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 4))
            layers = int(rng.integers(1, 3))
            cfg = AnsatzConfig(n, layers)
            obs = build_tfim(LatticeSpec(1, n), 0.4) if n > 1 else PauliObservable(
                [(1.0, "Z"), (0.3, "X")]
            )
            theta = rng.uniform(-np.pi, np.pi, cfg.num_params)
            grad = param_shift_gradient(cfg, theta, make_exact_evaluator(cfg, obs))
            fd = finite_difference(cfg, theta, obs)
            assert np.abs(grad.values - fd).max() <= 1e-6

    def test_empty_observable_zero_gradient(self):
        cfg = AnsatzConfig(2, 1)
        obs = PauliObservable([])
        grad = param_shift_gradient(cfg, np.zeros(2), make_exact_evaluator(cfg, obs))
        assert np.all(grad.values == 0.0)

    def test_evaluator_failure_propagates(self):
        cfg = AnsatzConfig(1, 1)

        def broken(_):
            raise RuntimeError("delegation aborted")

        with pytest.raises(RuntimeError):
            param_shift_gradient(cfg, [0.0], broken)


def test_gradient_estimate_invariant():
    with pytest.raises(ValueError):
        GradientEstimate(values=np.zeros(3), shots_used=0, evaluations=5)


def test_gradient_from_costs_order():
    g = gradient_from_costs([1.0, 0.0, 0.5, 1.5])
    np.testing.assert_allclose(g, [0.5, -0.5])

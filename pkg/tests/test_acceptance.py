"""Acceptance suite: one test per release criterion.

Each test prints a [PASS]/[FAIL] line (visible with ``pytest -s``). Stated
tolerances are pinned here, not configurable. Ordering follows the
criterion numbering; test names carry the number.
"""

import functools
import json
import time

import numpy as np
import pytest
from scipy import stats

from verivqe.ansatz import (
    AnsatzConfig,
    build_circuit,
    make_exact_evaluator,
    param_shift_gradient,
)
from verivqe.attacks import AngleShift, GradientPerturb, NoAttack, RoundCorruption
from verivqe.hamiltonian import LatticeSpec, build_tfim
from verivqe.mbqc import (
    circuit_to_pattern,
    greedy_coloring,
    make_computation_round,
    make_test_round,
    pattern_output_state,
    sampling_pattern,
    server_execute,
)
from verivqe.mbqc.rounds import RoundDriver
from verivqe.protocol import (
    InprocTransport,
    RunConfig,
    StepProblem,
    TcpTransport,
    run_step,
    run_vqa,
    serve_referee,
    serve_server,
    split_party_seeds,
)
from verivqe.protocol.descent import AbstractStepEngine
from verivqe.protocol.messages import SECRET_FIELD_NAMES, validate_server_visible
from verivqe.statevector import Gate, StateVector, apply_circuit, ground_energy
from verivqe.verification import (
    ConvergenceInputs,
    ErrorModel,
    StepBudget,
    check_convergence_conditions,
    corruption_budget,
    empirical_failure_rate,
    error_neighborhood,
    failure_probability_bound,
    iterations_needed,
    relative_error_bound,
)

E0_TFIM_2X2_H02 = -4.040593699203860  # dense diagonalization, pinned pre-build


def criterion(num, description, budget_s):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.monotonic()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] criterion {num}: {description}", flush=True)
                raise
            elapsed = time.monotonic() - start
            print(f"[PASS] criterion {num}: {description} ({elapsed:.1f}s "
                  f"of {budget_s}s budget)", flush=True)
            assert elapsed < budget_s, f"criterion {num} exceeded its time budget"
        return wrapper
    return deco


# ---------------------------------------------------------------------------
# 1. gradient correctness
# ---------------------------------------------------------------------------

@criterion(1, "parameter shift matches central finite differences", 10)
def test_criterion_1_gradient_correctness():
    rng = np.random.default_rng(101)
    step = 1e-5
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        layers = int(rng.integers(1, 3))
        cfg = AnsatzConfig(n, layers)
        obs = build_tfim(LatticeSpec(1, n), 0.4) if n > 1 else build_tfim(
            LatticeSpec(1, 1), 0.7)
        theta = rng.uniform(-np.pi, np.pi, cfg.num_params)
        evaluator = make_exact_evaluator(cfg, obs)
        grad = param_shift_gradient(cfg, theta, evaluator)
        for i in range(cfg.num_params):
            up = theta.copy()
            up[i] += step
            dn = theta.copy()
            dn[i] -= step
            fd = (evaluator(up) - evaluator(dn)) / (2 * step)
            worst = max(worst, abs(grad.values[i] - fd))
    assert worst <= 1e-6, f"max param-shift vs FD deviation {worst}"


# ---------------------------------------------------------------------------
# 2. exact-spectrum oracle
# ---------------------------------------------------------------------------

@criterion(2, "ground-energy oracle is exact on pinned cases", 5)
def test_criterion_2_oracle():
    x_field = np.array([[0, 0.2], [0.2, 0]], dtype=complex)
    assert ground_energy(x_field) == pytest.approx(-0.2, abs=1e-12)
    zz = np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)
    assert ground_energy(zz) == pytest.approx(-1.0, abs=1e-12)
    obs = build_tfim(LatticeSpec(2, 2), 0.2)
    assert ground_energy(obs.dense_matrix()) == pytest.approx(
        E0_TFIM_2X2_H02, abs=1e-9)


# ---------------------------------------------------------------------------
# 3. pattern-vs-circuit fidelity
# ---------------------------------------------------------------------------

@criterion(3, "MBQC patterns reproduce circuits to 1 - 1e-9", 60)
def test_criterion_3_mbqc_fidelity():
    rng = np.random.default_rng(303)
    kinds = ["RX", "RY", "RZ", "H", "CZ", "CNOT"]
    for draw in range(50):
        n = int(rng.integers(1, 4))
        if draw % 3 == 0:
            cfg = AnsatzConfig(n, int(rng.integers(1, 3)))
            gates = build_circuit(cfg, rng.uniform(-np.pi, np.pi, cfg.num_params))
        else:
            gates = []
            for _ in range(int(rng.integers(1, 10))):
                kind = kinds[rng.integers(0, len(kinds))]
                if kind in ("CZ", "CNOT"):
                    if n < 2:
                        continue
                    a, b = rng.choice(n, size=2, replace=False)
                    gates.append(Gate(kind, (int(a), int(b))))
                elif kind == "H":
                    gates.append(Gate(kind, (int(rng.integers(n)),)))
                else:
                    gates.append(Gate(kind, (int(rng.integers(n)),),
                                      float(rng.uniform(0, 2 * np.pi))))
        pattern = circuit_to_pattern(gates, n)
        for basis in range(1 << n):
            bits = [(basis >> (n - 1 - q)) & 1 for q in range(n)]
            amps = np.zeros(1 << n, dtype=complex)
            amps[basis] = 1.0
            want = apply_circuit(StateVector(amps), gates).amplitudes
            got = pattern_output_state(pattern, bits, rng)
            fid = abs(np.vdot(want, got)) ** 2
            assert fid >= 1 - 1e-9, f"fidelity {fid} on draw {draw}"


# ---------------------------------------------------------------------------
# 4. honest-trap determinism
# ---------------------------------------------------------------------------

@criterion(4, "honest server never trips a trap (10^4 rounds)", 120)
def test_criterion_4_honest_traps():
    rng = np.random.default_rng(404)
    cfg = AnsatzConfig(2, 2)
    gates = build_circuit(cfg, rng.uniform(-np.pi, np.pi, cfg.num_params))
    pattern = sampling_pattern(gates, 2, "ZZ")
    coloring = greedy_coloring(pattern.graph)
    failures = 0
    for _ in range(10_000):
        plan = make_test_round(pattern, coloring, rng)
        outcome = server_execute(plan, NoAttack(), rng)
        failures += sum(1 for ok in outcome.trap_verdicts.values() if not ok)
    assert failures == 0


# ---------------------------------------------------------------------------
# 5. blindness smoke test
# ---------------------------------------------------------------------------

@criterion(5, "transmitted angles uniform over the 8 blinding cosets", 60)
def test_criterion_5_blindness():
    rng = np.random.default_rng(505)
    cfg = AnsatzConfig(2, 2)
    for setting in range(2):
        theta = rng.uniform(-np.pi, np.pi, cfg.num_params)
        gates = build_circuit(cfg, theta)
        pattern = sampling_pattern(gates, 2, "ZZ")
        counts = {v: np.zeros(8) for v in pattern.graph.order}
        for _ in range(10_000):
            plan = make_computation_round(pattern, rng)
            driver = RoundDriver(plan)
            while not driver.done():
                v, delta = driver.next_vertex()
                adapted = pattern.adapted_angle(v, driver.true_bits)
                k = int(round(((delta - adapted) % (2 * np.pi)) / (np.pi / 4))) % 8
                counts[v][k] += 1
                driver.record(v, int(rng.integers(0, 2)))
        for v, c in counts.items():
            p = stats.chisquare(c).pvalue
            assert p > 0.001, f"setting {setting} vertex {v}: p={p}"


# ---------------------------------------------------------------------------
# 6. corrupted-round error bound
# ---------------------------------------------------------------------------

@criterion(6, "measured relative error within the corrupted-round bound", 120)
def test_criterion_6_error_bound():
    from test_verification import run_corruption_experiment

    rng = np.random.default_rng(606)
    done = 0
    while done < 50:
        delta = int(rng.integers(1, 25))
        res = run_corruption_experiment(rng, int(rng.integers(1, 4)),
                                        int(rng.integers(1, 3)), delta,
                                        shots_factor=int(rng.integers(30, 80)))
        if res is None:
            continue
        done += 1
        measured, bound = res
        assert measured <= bound + 1e-12, f"{measured} > {bound}"


# ---------------------------------------------------------------------------
# 7. failure-probability bound vs Monte Carlo
# ---------------------------------------------------------------------------

@criterion(7, "step failure bound dominates Monte Carlo and decays", 300)
def test_criterion_7_failure_bound():
    rng = np.random.default_rng(707)
    # m/n = 2w with w = 0.05 > eps1 = 0.025; tau = 0.05
    w, eps1, p_attack = 0.05, 0.025, 0.1
    model = ErrorModel(error_threshold=1.9, grad_norm_floor=1.0, one_norm=1.0,
                       slack=eps1)
    bounds = []
    for scale in (1, 2, 4):
        shots = 100 * scale
        budget = StepBudget(computation_rounds=2 * 19 * shots,
                            test_rounds=200 * scale, shots_per_eval=shots,
                            num_params=19, colors=2)
        cb = corruption_budget(model, budget)
        assert cb.per_round == pytest.approx(w)
        m = p_attack * budget.total_rounds
        bound = failure_probability_bound(m, budget, model, cb.per_round)
        est = empirical_failure_rate(budget, model, RoundCorruption(p_attack),
                                     2000, rng)
        width = est.ci_high - est.ci_low
        assert est.rate <= bound + width, (
            f"n={budget.total_rounds}: empirical {est.rate} above bound {bound}")
        bounds.append(bound)
    assert bounds[0] > bounds[1] > bounds[2], f"bound not decreasing: {bounds}"


# ---------------------------------------------------------------------------
# 8. end-to-end optimization comparison
# ---------------------------------------------------------------------------

@criterion(8, "verified descent converges where unverified drifts", 900)
def test_criterion_8_protocol2_end_to_end():
    cfg = AnsatzConfig(4, 2)
    obs = build_tfim(LatticeSpec(2, 2), 0.2)
    attack = GradientPerturb(probability=0.7, magnitude=1.0)
    arms = {"attack-free": (NoAttack(), True), "no-traps": (attack, False),
            "traps": (attack, True)}
    gaps = {arm: [] for arm in arms}
    for seed in range(5):
        theta_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7E7A]))
        theta0 = tuple(theta_rng.uniform(-0.1, 0.1, cfg.num_params))
        for arm_idx, (arm, (arm_attack, verify)) in enumerate(arms.items()):
            engine = AbstractStepEngine(cfg, obs, shots=1000, attack=arm_attack,
                                        error_threshold=0.5, verify=verify)
            run_cfg = RunConfig(theta0=theta0, n_iter=150, learning_rate=0.2,
                                error_threshold=0.5, shots=1000)
            rng = np.random.default_rng(np.random.SeedSequence([seed, arm_idx]))
            transcript = run_vqa(run_cfg, cfg, obs, engine, rng)
            gaps[arm].append(transcript.steps[-1].f_exact - E0_TFIM_2X2_H02)
    mean = {arm: float(np.mean(v)) for arm, v in gaps.items()}
    assert mean["attack-free"] <= 0.05 * abs(E0_TFIM_2X2_H02), mean
    assert mean["traps"] <= mean["no-traps"] / 3.0, mean


# ---------------------------------------------------------------------------
# 9. end-to-end verified step grid
# ---------------------------------------------------------------------------

@criterion(9, "relative error above threshold is always detected", 1200)
def test_criterion_9_protocol1_end_to_end():
    e_th = 0.3
    cfg = AnsatzConfig(2, 2)
    obs = build_tfim(LatticeSpec(1, 2), 0.2)
    shots = 500  # d = 2 * 4 * 500 = 4000
    budget = StepBudget(computation_rounds=4000, test_rounds=50,
                        shots_per_eval=shots, num_params=4, colors=2)
    theta_rng = np.random.default_rng(np.random.SeedSequence([0, 0x7E7A]))
    theta = theta_rng.uniform(-np.pi, np.pi, cfg.num_params)
    exact = param_shift_gradient(cfg, theta, make_exact_evaluator(cfg, obs))
    norm = exact.norm1()
    problem = StepProblem.make(cfg, obs, theta)

    agree = 0
    total = 0
    for gi, p_attack in enumerate((0.0, 0.3, 1.0)):
        for ai, shift in enumerate((np.pi / 8, np.pi / 2, np.pi)):
            attack = AngleShift(p_attack=p_attack, shift=shift) if p_attack else NoAttack()
            for run in range(10):
                seeds = np.random.SeedSequence([909, gi, ai, run]).spawn(3)
                transport = InprocTransport(attack, seeds[1], seeds[2])
                out = run_step(problem, budget, transport,
                               np.random.default_rng(seeds[0]),
                               enforce_abort=False)
                err = float(np.abs(out.gradient.values - exact.values).sum()) / norm
                n_td = out.trap_failures
                total += 1
                if p_attack == 0.0:
                    assert n_td == 0, "honest run tripped a trap"
                if err > e_th:
                    assert n_td >= 1, (
                        f"undetected corruption: p={p_attack} shift={shift} e={err}")
                agree += 1 if (err <= e_th or n_td >= 1) else 0
    assert agree / total >= 0.9


# ---------------------------------------------------------------------------
# 10. closed-form suite
# ---------------------------------------------------------------------------

@criterion(10, "closed-form bound arithmetic is exact", 1)
def test_criterion_10_closed_forms():
    budget = StepBudget(4000, 50, 1000, 2, 2)
    model = ErrorModel(error_threshold=0.1, grad_norm_floor=1.0, one_norm=5.0,
                       slack=0.001)
    cb = corruption_budget(model, budget)
    assert cb.max_corrupted == pytest.approx(20.0, rel=1e-12)
    assert relative_error_bound(20, model, 1000) == pytest.approx(0.1, rel=1e-12)

    mu, lips, alpha = 1.0, 5.0, 0.1
    rep0 = check_convergence_conditions(ConvergenceInputs(mu, lips, alpha, 0.0, 0.0))
    assert rep0.contraction == pytest.approx(1 - mu * alpha * (2 - alpha * lips),
                                             rel=1e-12)
    e = 0.3
    rep1 = check_convergence_conditions(
        ConvergenceInputs(mu, lips, 1.0 / (lips * (1 + e)), e, 0.0))
    assert rep1.contraction == pytest.approx(1 - mu / lips, rel=1e-12)

    base = error_neighborhood(ConvergenceInputs(1.0, 5.0, 0.1, 0.1, 0.04))
    doubled = error_neighborhood(ConvergenceInputs(1.0, 5.0, 0.1, 0.1, 0.08))
    assert doubled == pytest.approx(2 * base, rel=1e-12)
    assert base == pytest.approx(0.007586206896551725, rel=1e-12)

    assert iterations_needed(0.1, 1.0, 1e-3) == 70


# ---------------------------------------------------------------------------
# 11. transport equivalence and structural blindness
# ---------------------------------------------------------------------------

@criterion(11, "in-process and TCP transports are byte-equivalent", 30)
def test_criterion_11_transport():
    cfg = AnsatzConfig(2, 1)
    obs = build_tfim(LatticeSpec(1, 2), 0.2)
    problem = StepProblem.make(cfg, obs, (0.4, -0.9))
    budget = StepBudget(computation_rounds=32, test_rounds=3, shots_per_eval=8,
                        num_params=2, colors=2)
    seed = 1111
    client_ss, server_ss, referee_ss = split_party_seeds(seed)
    local = run_step(problem, budget,
                     InprocTransport(NoAttack(), server_ss, referee_ss),
                     np.random.default_rng(client_ss), keep_record=True)

    client_ss, server_ss, referee_ss = split_party_seeds(seed)
    ref_srv = serve_referee("127.0.0.1", 0, referee_ss)
    srv_srv = serve_server("127.0.0.1", 0, ref_srv.server_address, NoAttack(),
                           server_ss)
    tcp = TcpTransport(srv_srv.server_address, ref_srv.server_address)
    try:
        remote = run_step(problem, budget, tcp, np.random.default_rng(client_ss),
                          keep_record=True)
    finally:
        tcp.close()
    assert local.record.canonical() == remote.record.canonical()
    assert local.verdict == remote.verdict
    np.testing.assert_array_equal(local.gradient.values, remote.gradient.values)

    log = srv_srv.party.log
    assert log
    for entry in log:
        validate_server_visible({k: v for k, v in entry.items() if k != "dir"})
    text = json.dumps(log)
    for name in SECRET_FIELD_NAMES:
        assert f'"{name}"' not in text, f"secret field {name} leaked into the log"
    srv_srv.shutdown()
    ref_srv.shutdown()

"""Benchmark the blinded-round hot path on both kernel backends.

The engine binds its kernels at import, so each backend is timed in a
fresh subprocess; the numpy fallback is forced via VERIVQE_DISABLE_NUMBA.

Run:  python benchmarks/bench_round_kernels.py [n_rounds]
"""

import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, time
import numpy as np
from verivqe import _accel
from verivqe.ansatz import AnsatzConfig, build_circuit
from verivqe.attacks import NoAttack
from verivqe.mbqc import (greedy_coloring, make_computation_round,
                          make_test_round, sampling_pattern, server_execute)

n_rounds = %(n_rounds)d
rng = np.random.default_rng(42)
cfg = AnsatzConfig(2, 2)
gates = build_circuit(cfg, rng.uniform(-np.pi, np.pi, cfg.num_params))
pattern = sampling_pattern(gates, 2, "ZZ")
coloring = greedy_coloring(pattern.graph)

# warm-up (includes any JIT compilation)
for _ in range(20):
    server_execute(make_test_round(pattern, coloring, rng), NoAttack(), rng)
    server_execute(make_computation_round(pattern, rng), NoAttack(), rng)

t0 = time.perf_counter()
for _ in range(n_rounds):
    plan = make_test_round(pattern, coloring, rng)
    server_execute(plan, NoAttack(), rng)
test_s = time.perf_counter() - t0

t0 = time.perf_counter()
for _ in range(n_rounds):
    plan = make_computation_round(pattern, rng)
    server_execute(plan, NoAttack(), rng)
comp_s = time.perf_counter() - t0

print(json.dumps({"backend": _accel.backend_name(),
                  "test_rounds_per_s": n_rounds / test_s,
                  "comp_rounds_per_s": n_rounds / comp_s}))
"""


def run_backend(disable_numba: bool, n_rounds: int) -> dict:
    env = dict(os.environ)
    if disable_numba:
        env["VERIVQE_DISABLE_NUMBA"] = "1"
    else:
        env.pop("VERIVQE_DISABLE_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD % {"n_rounds": n_rounds}],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    n_rounds = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
    print(f"workload: {n_rounds} test rounds + {n_rounds} computation rounds "
          f"(2-qubit, 2-layer ansatz pattern)")
    results = [run_backend(False, n_rounds), run_backend(True, n_rounds)]
    print(f"{'backend':10s} {'test rounds/s':>15s} {'comp rounds/s':>15s}")
    for r in results:
        print(f"{r['backend']:10s} {r['test_rounds_per_s']:15.0f} "
              f"{r['comp_rounds_per_s']:15.0f}")
    if results[0]["backend"] != results[1]["backend"]:
        speedup = results[0]["comp_rounds_per_s"] / results[1]["comp_rounds_per_s"]
        print(f"numba speedup on computation rounds: {speedup:.1f}x")


if __name__ == "__main__":
    main()

"""Experiment command line: reproduces the TFIM experiments and bound tables.

Subcommands:

* ``tfim-vqe``: three-arm optimization comparison (attack-free, unverified
  under attack, verified under attack), CSV + metadata per seed;
* ``verify-step``: single delegated step over a (p_attack, angle-shift)
  grid, reporting gradient error vs trap detections;
* ``bounds``: JSON report of every closed-form quantity;
* ``ground-energy``: exact TFIM ground energy;
* ``serve-referee`` / ``serve-server``: stand-alone TCP endpoints.

Flags override config-file values (``--config``, JSON with the same keys,
dashes as underscores). Exit codes: 0 success, 1 run-level abort verdict,
2 usage error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .ansatz import AnsatzConfig, make_exact_evaluator, param_shift_gradient
from .attacks import AngleShift, GradientPerturb, NoAttack, attack_to_json
from .hamiltonian import LatticeSpec, build_tfim
from .protocol import (
    InprocTransport,
    RunConfig,
    StepProblem,
    TcpTransport,
    run_step,
    run_vqa,
    serve_referee,
    serve_server,
)
from .protocol.descent import AbstractStepEngine
from .statevector import ground_energy
from .verification import (
    ConvergenceInputs,
    ErrorModel,
    StepBudget,
    check_convergence_conditions,
    corruption_budget,
    failure_probability_bound,
    iterations_needed,
)

ARMS = ("attack-free", "no-traps", "traps")


class UsageError(Exception):
    pass


def _parse_lattice(text: str) -> LatticeSpec:
    try:
        rows, cols = text.lower().split("x")
        return LatticeSpec(int(rows), int(cols))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad lattice {text!r}, expected RxC") from exc


def _parse_angle(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    expr = str(text).strip()
    allowed = set("0123456789pi/*.+-() ")
    if set(expr) - allowed:
        raise UsageError(f"bad angle expression {expr!r}")
    try:
        return float(eval(expr, {"__builtins__": {}}, {"pi": math.pi}))
    except Exception as exc:
        raise UsageError(f"bad angle expression {expr!r}") from exc


def _parse_list(text, conv):
    if isinstance(text, (list, tuple)):
        return [conv(x) for x in text]
    return [conv(x) for x in str(text).split(",") if str(x).strip() != ""]


def _parse_addr(text: str) -> tuple[str, int]:
    host, port = str(text).rsplit(":", 1)
    return host, int(port)


def _merged(args: argparse.Namespace, key: str, default=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    cfg = getattr(args, "_config_file", {})
    if key.replace("-", "_") in cfg:
        return cfg[key.replace("-", "_")]
    return default


def _require(args, key):
    val = _merged(args, key)
    if val is None:
        raise UsageError(f"missing required option --{key}")
    return val


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _write_metadata(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _party_seeds(*entropy):
    return np.random.SeedSequence(list(entropy)).spawn(4)


# ---------------------------------------------------------------------------
# tfim-vqe
# ---------------------------------------------------------------------------

def cmd_tfim_vqe(args) -> int:
    lattice = _parse_lattice(_require(args, "lattice"))
    h = float(_merged(args, "h", 0.2))
    layers = int(_merged(args, "layers", 2))
    shots = int(_merged(args, "shots", 1000))
    lr = float(_merged(args, "lr", 0.2))
    e_th = float(_merged(args, "e-th", 0.5))
    p_attack = float(_merged(args, "p-attack", 0.7))
    delta = float(_merged(args, "delta", 1.0))
    n_iter = int(_merged(args, "n-iter", 150))
    seeds = _parse_list(_merged(args, "seeds", "0,1,2,3,4"), int)
    tol_g = float(_merged(args, "tol-g", 0.5))
    window = int(_merged(args, "window", 10))
    max_reruns = int(_merged(args, "max-reruns", 25))
    out_dir = _require(args, "out")
    os.makedirs(out_dir, exist_ok=True)

    obs = build_tfim(lattice, h)
    config = AnsatzConfig(lattice.num_sites, layers)
    e0 = ground_energy(obs.dense_matrix())
    attack = GradientPerturb(probability=p_attack, magnitude=delta)

    transcripts_dir = os.path.join(out_dir, "transcripts")
    os.makedirs(transcripts_dir, exist_ok=True)
    rows = []
    verdicts = {}
    for seed in seeds:
        theta_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7E7A]))
        theta0 = tuple(theta_rng.uniform(-0.1, 0.1, config.num_params))
        for arm_idx, arm in enumerate(ARMS):
            arm_attack = NoAttack() if arm == "attack-free" else attack
            verify = arm != "no-traps"
            engine = AbstractStepEngine(config, obs, shots=shots,
                                        attack=arm_attack,
                                        error_threshold=e_th, verify=verify)
            run_cfg = RunConfig(theta0=theta0, n_iter=n_iter, learning_rate=lr,
                                error_threshold=e_th, shots=shots,
                                max_reruns_per_step=max_reruns, window=window,
                                tol_g=tol_g)
            rng = np.random.default_rng(np.random.SeedSequence([seed, arm_idx]))
            transcript = run_vqa(run_cfg, config, obs, engine, rng)
            verdicts[(seed, arm)] = transcript.final_verdict
            with open(os.path.join(transcripts_dir, f"{seed}_{arm}.jsonl"), "w") as fh:
                fh.write(transcript.to_jsonl())
            for log in transcript.steps:
                rows.append([seed, arm, log.step, repr(log.f_hat),
                             repr(log.f_exact), log.reruns,
                             repr(log.grad_norm1)])

    _write_csv(os.path.join(out_dir, "steps.csv"),
               ["seed", "arm", "step", "f_hat", "f_exact", "reruns", "grad_norm1"],
               rows)

    # per-(arm, step) mean over seeds
    sums: dict[tuple[str, int], list[float]] = {}
    counts: dict[tuple[str, int], int] = {}
    for seed, arm, step, f_hat, f_exact, reruns, gnorm in rows:
        key = (arm, step)
        acc = sums.setdefault(key, [0.0, 0.0])
        acc[0] += float(f_hat)
        acc[1] += float(f_exact)
        counts[key] = counts.get(key, 0) + 1
    summary_rows = []
    for arm in ARMS:
        for step in range(1, n_iter + 1):
            key = (arm, step)
            if key in sums:
                n = counts[key]
                summary_rows.append([arm, step, repr(sums[key][0] / n),
                                     repr(sums[key][1] / n)])
    _write_csv(os.path.join(out_dir, "summary.csv"),
               ["arm", "step", "mean_f_hat", "mean_f_exact"],
               summary_rows)

    resolved = {
        "lattice": f"{lattice.rows}x{lattice.cols}", "h": h, "layers": layers,
        "shots": shots, "lr": lr, "e_th": e_th, "n_iter": n_iter,
        "tol_g": tol_g, "window": window, "max_reruns": max_reruns,
        "attack": attack_to_json(attack), "seeds": seeds,
    }
    _write_metadata(os.path.join(out_dir, "metadata.json"), {
        "command": "tfim-vqe", "version": __version__, "config": resolved,
        "observable": obs.to_json(), "ground_energy": e0, "e_th": e_th,
        "columns": {
            "steps.csv": ["seed", "arm", "step", "f_hat", "f_exact", "reruns", "grad_norm1"],
            "summary.csv": ["arm", "step", "mean_f_hat", "mean_f_exact"],
        },
        "arm_verdicts": {f"{s}/{a}": v for (s, a), v in sorted(verdicts.items(),
                                                               key=lambda kv: str(kv[0]))},
    })
    traps_verdicts = [v for (s, a), v in verdicts.items() if a == "traps"]
    if traps_verdicts and all(v == "abort" for v in traps_verdicts):
        return 1
    return 0


# ---------------------------------------------------------------------------
# verify-step
# ---------------------------------------------------------------------------

def cmd_verify_step(args) -> int:
    lattice = _parse_lattice(_merged(args, "lattice", "1x2"))
    if lattice.num_sites > 3:
        raise UsageError("verify-step is desk-scale: at most 3 qubits")
    h = float(_merged(args, "h", 0.2))
    layers = int(_merged(args, "layers", 2))
    shots = int(_merged(args, "shots", 500))
    t_rounds = int(_merged(args, "t-rounds", 50))
    e_th = float(_merged(args, "e-th", 0.3))
    runs = int(_merged(args, "runs", 10))
    seed = int(_merged(args, "seed", 0))
    p_grid = _parse_list(_merged(args, "p-attack", "0,0.3,1.0"), float)
    a_grid = _parse_list(_merged(args, "angle-shift", "pi/8,pi/2,pi"), _parse_angle)
    transport_kind = _merged(args, "transport", "inproc")
    out_dir = _require(args, "out")
    os.makedirs(out_dir, exist_ok=True)

    obs = build_tfim(lattice, h)
    config = AnsatzConfig(lattice.num_sites, layers)
    budget = StepBudget(computation_rounds=2 * config.num_params * shots,
                        test_rounds=t_rounds, shots_per_eval=shots,
                        num_params=config.num_params, colors=2)
    theta_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7E7A]))
    theta = theta_rng.uniform(-np.pi, np.pi, config.num_params)
    g_exact = param_shift_gradient(config, theta, make_exact_evaluator(config, obs))
    g_norm = g_exact.norm1()

    rows = []
    for gi, p in enumerate(p_grid):
        for ai, shift in enumerate(a_grid):
            attack = AngleShift(p_attack=p, shift=shift) if p > 0 else NoAttack()
            for run in range(runs):
                client_ss, server_ss, referee_ss, _ = _party_seeds(seed, gi, ai, run)
                outcome = _run_one_observed_step(
                    config, obs, theta, budget, attack, transport_kind,
                    client_ss, server_ss, referee_ss, args)
                err = float(np.abs(outcome.gradient.values - g_exact.values).sum()) / g_norm
                rows.append([repr(p), repr(shift), run, repr(err),
                             outcome.trap_failures])

    _write_csv(os.path.join(out_dir, "verify_step.csv"),
               ["p_attack", "angle_shift", "run", "e", "n_td"], rows)
    _write_metadata(os.path.join(out_dir, "metadata.json"), {
        "command": "verify-step", "version": __version__,
        "config": {
            "lattice": f"{lattice.rows}x{lattice.cols}", "h": h,
            "layers": layers, "shots": shots, "t_rounds": t_rounds,
            "computation_rounds": budget.computation_rounds,
            "runs": runs, "seed": seed, "p_attack_grid": p_grid,
            "angle_shift_grid": a_grid, "transport": transport_kind,
        },
        "e_th": e_th, "grad_norm1_exact": g_norm,
        "columns": {"verify_step.csv": ["p_attack", "angle_shift", "run", "e", "n_td"]},
    })
    return 0


def _run_one_observed_step(config, obs, theta, budget, attack, transport_kind,
                           client_ss, server_ss, referee_ss, args):
    problem = StepProblem.make(config, obs, theta)
    rng = np.random.default_rng(client_ss)
    if transport_kind == "inproc":
        transport = InprocTransport(attack, server_ss, referee_ss)
        return run_step(problem, budget, transport, rng, enforce_abort=False)
    if transport_kind == "tcp":
        ref_srv = serve_referee("127.0.0.1", 0, referee_ss)
        srv_srv = serve_server("127.0.0.1", 0, ref_srv.server_address,
                               attack, server_ss)
        transport = TcpTransport(srv_srv.server_address, ref_srv.server_address)
        try:
            return run_step(problem, budget, transport, rng, enforce_abort=False)
        finally:
            transport.close()
            srv_srv.shutdown()
            ref_srv.shutdown()
    raise UsageError(f"unknown transport {transport_kind!r}")


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def cmd_bounds(args) -> int:
    lattice = _parse_lattice(_merged(args, "lattice", "2x2"))
    h = float(_merged(args, "h", 0.2))
    layers = int(_merged(args, "layers", 2))
    shots = int(_merged(args, "shots", 1000))
    e_th = float(_merged(args, "e-th", 0.1))
    colors = int(_merged(args, "colors", 2))
    t_rounds = int(_merged(args, "t-rounds", 50))
    p_attack = float(_merged(args, "p-attack", 0.1))
    mu = float(_merged(args, "mu", 1.0))
    lips = float(_merged(args, "lipschitz", 5.0))
    lr = float(_merged(args, "lr", 0.1))
    sigma_g2 = float(_merged(args, "sigma-g2", 0.0))

    obs = build_tfim(lattice, h)
    config = AnsatzConfig(lattice.num_sites, layers)
    eps0 = _merged(args, "eps0")
    eps0 = float(eps0) if eps0 is not None else 0.05 * obs.one_norm

    budget = StepBudget(computation_rounds=2 * config.num_params * shots,
                        test_rounds=t_rounds, shots_per_eval=shots,
                        num_params=config.num_params, colors=colors)
    cb_probe = corruption_budget(
        ErrorModel(error_threshold=e_th, grad_norm_floor=eps0,
                   one_norm=obs.one_norm, slack=0.0), budget)
    eps1 = _merged(args, "eps1")
    eps1 = float(eps1) if eps1 is not None else cb_probe.per_round / 2.0
    model = ErrorModel(error_threshold=e_th, grad_norm_floor=eps0,
                       one_norm=obs.one_norm, slack=eps1)
    cb = corruption_budget(model, budget)

    grid = []
    for scale in (1, 2, 4):
        scaled = StepBudget(
            computation_rounds=budget.computation_rounds * scale,
            test_rounds=budget.test_rounds * scale,
            shots_per_eval=budget.shots_per_eval * scale,
            num_params=budget.num_params, colors=budget.colors)
        m = p_attack * scaled.total_rounds
        grid.append({
            "n": scaled.total_rounds, "attacked": m,
            "bound": failure_probability_bound(m, scaled, model, cb.per_round),
        })

    conv = check_convergence_conditions(ConvergenceInputs(
        strong_convexity=mu, lipschitz=lips, learning_rate=lr,
        grad_error=e_th, shot_variance=sigma_g2))
    iters = {}
    if conv.conditions_met and 0 < conv.rate < 1:
        for eps in (1e-1, 1e-2, 1e-3):
            iters[repr(eps)] = iterations_needed(conv.rate, 1.0, eps)

    report = {
        "version": __version__,
        "one_norm": obs.one_norm,
        "num_params": config.num_params,
        "delta_max": cb.max_corrupted,
        "w": cb.per_round,
        "eps0": eps0,
        "eps1": eps1,
        "e_th": e_th,
        "failure_bound_grid": grid,
        "gamma": conv.contraction,
        "conditions_met": conv.conditions_met,
        "z_inf": conv.asymptotic_gap,
        "iterations_for_unit_gap": iters,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    out_dir = _merged(args, "out")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "bounds.json"), "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


# ---------------------------------------------------------------------------
# ground-energy and serve commands
# ---------------------------------------------------------------------------

def cmd_ground_energy(args) -> int:
    lattice = _parse_lattice(_require(args, "lattice"))
    h = float(_merged(args, "h", 0.2))
    obs = build_tfim(lattice, h)
    e0 = ground_energy(obs.dense_matrix())
    payload = {"lattice": f"{lattice.rows}x{lattice.cols}", "h": h, "E0": e0}
    text = json.dumps(payload, sort_keys=True)
    out_dir = _merged(args, "out")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "ground_energy.json"), "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_serve_referee(args) -> int:
    host, port = _parse_addr(_require(args, "listen"))
    seed = int(_merged(args, "seed", 0))
    server = serve_referee(host, port, np.random.SeedSequence(seed))
    print(f"referee listening on {server.server_address[0]}:{server.server_address[1]}",
          flush=True)
    try:
        import threading
        threading.Event().wait()
    except KeyboardInterrupt:  # pragma: no cover
        server.shutdown()
    return 0


def cmd_serve_server(args) -> int:
    host, port = _parse_addr(_require(args, "listen"))
    referee_addr = _parse_addr(_require(args, "connect"))
    seed = int(_merged(args, "seed", 0))
    p = float(_merged(args, "p-attack", 0.0))
    shift = _parse_angle(_merged(args, "angle-shift", 0.0))
    attack = AngleShift(p_attack=p, shift=shift) if p > 0 else NoAttack()
    server = serve_server(host, port, referee_addr, attack, np.random.SeedSequence(seed))
    print(f"server listening on {server.server_address[0]}:{server.server_address[1]}",
          flush=True)
    try:
        import threading
        threading.Event().wait()
    except KeyboardInterrupt:  # pragma: no cover
        server.shutdown()
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--lattice")
    p.add_argument("--h", type=float)
    p.add_argument("--layers", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="verivqe")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tfim-vqe", help="three-arm optimization comparison")
    _add_common(p)
    p.add_argument("--lr", type=float)
    p.add_argument("--e-th", type=float)
    p.add_argument("--p-attack", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--n-iter", type=int)
    p.add_argument("--seeds")
    p.add_argument("--tol-g", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--max-reruns", type=int)
    p.set_defaults(func=cmd_tfim_vqe)

    p = sub.add_parser("verify-step", help="single-step error vs detections grid")
    _add_common(p)
    p.add_argument("--t-rounds", type=int)
    p.add_argument("--e-th", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p-attack", help="comma list of attack probabilities")
    p.add_argument("--angle-shift", help="comma list of angle shifts (pi ok)")
    p.add_argument("--transport", choices=("inproc", "tcp"))
    p.set_defaults(func=cmd_verify_step)

    p = sub.add_parser("bounds", help="closed-form bound report")
    _add_common(p)
    p.add_argument("--e-th", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--eps1", type=float)
    p.add_argument("--colors", type=int)
    p.add_argument("--t-rounds", type=int)
    p.add_argument("--p-attack", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--lipschitz", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--sigma-g2", type=float)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("ground-energy", help="exact TFIM ground energy")
    _add_common(p)
    p.set_defaults(func=cmd_ground_energy)

    p = sub.add_parser("serve-referee", help="stand-alone referee endpoint")
    p.add_argument("--listen", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_serve_referee)

    p = sub.add_parser("serve-server", help="stand-alone (attackable) server endpoint")
    p.add_argument("--listen", required=True)
    p.add_argument("--connect", required=True, help="referee HOST:PORT")
    p.add_argument("--seed", type=int)
    p.add_argument("--p-attack", type=float)
    p.add_argument("--angle-shift")
    p.add_argument("--config")
    p.set_defaults(func=cmd_serve_server)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                args._config_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    else:
        args._config_file = {}
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

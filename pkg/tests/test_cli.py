"""Command-line front end: artifacts, determinism, exit codes."""

import json
import subprocess
import sys

import pytest

from verivqe.cli import main

E0_2X2 = -4.040593699203860


def run_cli(args):
    return main(list(args))


class TestGroundEnergy:
    def test_one_qubit(self, capsys):
        assert run_cli(["ground-energy", "--lattice", "1x1", "--h", "0.2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["E0"] == pytest.approx(-0.2, abs=1e-9)

    def test_single_edge(self, capsys):
        assert run_cli(["ground-energy", "--lattice", "1x2", "--h", "0"]) == 0
        assert json.loads(capsys.readouterr().out)["E0"] == pytest.approx(-1.0, abs=1e-9)

    def test_2x2_golden(self, capsys):
        assert run_cli(["ground-energy", "--lattice", "2x2", "--h", "0.2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["E0"] == pytest.approx(E0_2X2, abs=1e-9)

    def test_bad_lattice_usage_error(self, capsys):
        assert run_cli(["ground-energy", "--lattice", "2by2"]) == 2


class TestBounds:
    def test_arithmetic_example(self, capsys):
        code = run_cli(["bounds", "--lattice", "2x2", "--h", "0.2", "--layers", "1",
                        "--shots", "1000", "--e-th", "0.1", "--eps0", "1.0"])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        # one_norm 4.8: delta_max = 0.1 * 1 * 1000 / 4.8
        assert report["delta_max"] == pytest.approx(0.1 * 1000 / 4.8)
        assert report["one_norm"] == pytest.approx(4.8)

    def test_textbook_contraction_at_zero_threshold(self, capsys):
        code = run_cli(["bounds", "--lattice", "1x2", "--e-th", "0", "--eps0", "1",
                        "--eps1", "0.001", "--mu", "1.0", "--lipschitz", "5.0",
                        "--lr", "0.1"])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["gamma"] == pytest.approx(1 - 1.0 * 0.1 * (2 - 0.1 * 5.0))

    def test_report_is_schema_stable(self, capsys):
        run_cli(["bounds", "--lattice", "1x2", "--eps1", "0.0001"])
        report = json.loads(capsys.readouterr().out)
        assert {"delta_max", "w", "failure_bound_grid", "gamma", "z_inf",
                "conditions_met", "iterations_for_unit_gap"} <= set(report)


class TestTfimVqe:
    def test_small_run_artifacts(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(["tfim-vqe", "--lattice", "1x2", "--h", "0.2",
                        "--layers", "1", "--shots", "100", "--n-iter", "5",
                        "--seeds", "0,1", "--out", str(out)])
        assert code in (0, 1)  # short runs may abort the traps arm
        steps = (out / "steps.csv").read_text().splitlines()
        assert steps[0] == "seed,arm,step,f_hat,f_exact,reruns,grad_norm1"
        assert len(steps) == 1 + 2 * 3 * 5  # seeds x arms x iters
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["command"] == "tfim-vqe"
        assert meta["config"]["seeds"] == [0, 1]
        assert "ground_energy" in meta
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0] == "arm,step,mean_f_hat,mean_f_exact"
        # per-run JSON-lines transcripts: one record per step plus a verdict
        transcript = (out / "transcripts" / "0_traps.jsonl").read_text().splitlines()
        assert len(transcript) == 5 + 1
        assert json.loads(transcript[0])["step"] == 1
        assert "final_verdict" in json.loads(transcript[-1])

    def test_zero_iterations(self, tmp_path):
        out = tmp_path / "zero"
        code = run_cli(["tfim-vqe", "--lattice", "1x2", "--layers", "1",
                        "--shots", "100", "--n-iter", "0", "--seeds", "0",
                        "--out", str(out)])
        assert code == 1  # no convergence evidence: run-level abort
        steps = (out / "steps.csv").read_text().splitlines()
        assert len(steps) == 1  # header only
        assert json.loads((out / "metadata.json").read_text())["config"]["n_iter"] == 0

    def test_byte_determinism(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run_cli(["tfim-vqe", "--lattice", "1x2", "--layers", "1",
                     "--shots", "60", "--n-iter", "4", "--seeds", "3",
                     "--out", str(out)])
            outs.append((out / "steps.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"lattice": "1x2", "layers": 1, "shots": 60,
                                   "n_iter": 3, "seeds": "0", "out": str(tmp_path / "c")}))
        code = run_cli(["tfim-vqe", "--config", str(cfg), "--n-iter", "2"])
        assert code in (0, 1)
        meta = json.loads((tmp_path / "c" / "metadata.json").read_text())
        assert meta["config"]["n_iter"] == 2  # flag wins
        assert meta["config"]["shots"] == 60  # file value


class TestVerifyStep:
    def test_grid_artifacts_and_honest_rows(self, tmp_path):
        out = tmp_path / "vs"
        code = run_cli(["verify-step", "--lattice", "1x2", "--layers", "1",
                        "--shots", "20", "--t-rounds", "4", "--runs", "2",
                        "--p-attack", "0,1.0", "--angle-shift", "pi",
                        "--out", str(out)])
        assert code == 0
        rows = (out / "verify_step.csv").read_text().splitlines()
        assert rows[0] == "p_attack,angle_shift,run,e,n_td"
        assert len(rows) == 1 + 2 * 1 * 2
        for line in rows[1:]:
            p_attack, _, _, _, n_td = line.split(",")
            if float(p_attack) == 0.0:
                assert int(n_td) == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert "e_th" in meta

    def test_too_large_problem_rejected(self, tmp_path):
        code = run_cli(["verify-step", "--lattice", "2x2",
                        "--out", str(tmp_path / "x")])
        assert code == 2


def test_missing_required_flag():
    assert run_cli(["tfim-vqe", "--lattice", "1x2"]) == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "verivqe.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0

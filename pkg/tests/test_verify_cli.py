import json

import numpy as np
import pytest

from metarisk import cli, fano, verify
from metarisk.exceptions import ValidationError
from metarisk.model import environment_from_json


@pytest.fixture
def sweep_config(tmp_path):
    doc = {
        "base": {
            "d": 3,
            "tau": [0.0, 1.0, 0.5],
            "sigma_theta_sq": 0.2,
            "noise_sq_source": 0.5,
            "noise_sq_novel": 1.0,
            "design_kind": "gaussian",
        },
        "sweep": {"axis": "novel_noise_sq", "grid": [0.5, 2.0]},
        "configs": [{"id": "a", "M": 2, "n": 6, "k": 4}],
        "reps": 20,
        "risk_mode": "frequentist",
        "seed": 7,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path, doc


class TestVerifySuites:
    def test_all_suites_pass(self):
        report = verify.run_all(mi_cases=40, matrix_cases=100, decoder_cases=40, packing_budget=10_000, seed=5)
        assert report["total_failures"] == 0
        names = {s["name"] for s in report["suites"]}
        assert {"singular-sum-max", "local-packing", "fano-decoder-random-joints", "greedy-packing"} <= names
        for suite in report["suites"]:
            assert suite["failing_example"] is None

    def test_bound_records_have_base(self):
        report = verify.run_all(mi_cases=10, matrix_cases=10, decoder_cases=10, packing_budget=2_000, seed=6)
        assert report["bound_records"]
        assert all(rec["base"] == "bits" for rec in report["bound_records"])

    def test_corrupted_kl_matrix_is_named(self):
        with pytest.raises(ValidationError, match="nonnegative"):
            fano.KLMatrix(np.array([[0.0, 1.0], [-0.5, 0.0]]))

    def test_tracker_captures_failing_instance(self):
        tracker = verify._Tracker("demo")
        tracker.check(-1.0, {"case": 3})
        result = tracker.result()
        assert result.failures == 1
        assert result.failing_example["case"] == 3


class TestCliRiskSweep:
    def test_byte_identical_reruns(self, tmp_path, sweep_config):
        path, _ = sweep_config
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["risk-sweep", "--config", str(path), "--out", str(out_a)]) == 0
        assert cli.main(["risk-sweep", "--config", str(path), "--out", str(out_b)]) == 0
        assert (out_a / "risk_sweep.csv").read_bytes() == (out_b / "risk_sweep.csv").read_bytes()

    def test_reps_override(self, tmp_path, sweep_config):
        path, _ = sweep_config
        out = tmp_path / "out"
        assert cli.main(["risk-sweep", "--config", str(path), "--out", str(out), "--reps", "0"]) == 0
        body = (out / "risk_sweep.csv").read_text().splitlines()[1:]
        assert all(line.split(",")[6] == "" for line in body)

    def test_unknown_key_is_validation_error(self, tmp_path, sweep_config, capsys):
        path, doc = sweep_config
        doc["mystery"] = 1
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert cli.main(["risk-sweep", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
        assert "mystery" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert cli.main(["risk-sweep", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1

    def test_unwritable_output(self, tmp_path, sweep_config):
        path, _ = sweep_config
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory")
        assert cli.main(["risk-sweep", "--config", str(path), "--out", str(blocker)]) == 1

    def test_low_dimension_warns_and_empties_lower(self, tmp_path, capsys):
        doc = {
            "base": {
                "d": 2,
                "tau": [0.0, 1.0],
                "sigma_theta_sq": 0.2,
                "noise_sq_source": 0.5,
                "noise_sq_novel": 1.0,
                "design_kind": "gaussian",
            },
            "sweep": {"axis": "novel_noise_sq", "grid": [0.5, 2.0]},
            "configs": [{"id": "a", "M": 2, "n": 5, "k": 4}],
            "reps": 0,
            "seed": 3,
        }
        path = tmp_path / "low.json"
        path.write_text(json.dumps(doc))
        out = tmp_path / "out"
        assert cli.main(["bounds", "--config", str(path), "--out", str(out)]) == 0
        assert "lower_thm51 column left empty" in capsys.readouterr().out
        body = (out / "bounds.csv").read_text().splitlines()[1:]
        assert all(line.endswith(",") for line in body)


class TestCliBounds:
    def test_bounds_leaves_mc_empty(self, tmp_path, sweep_config):
        path, _ = sweep_config
        out = tmp_path / "out"
        assert cli.main(["bounds", "--config", str(path), "--out", str(out)]) == 0
        for line in (out / "bounds.csv").read_text().splitlines()[1:]:
            cells = line.split(",")
            assert cells[6] == "" and cells[7] == ""
            assert cells[2] != ""


class TestCliVerify:
    def test_verify_passes(self, tmp_path):
        out = tmp_path / "v"
        code = cli.main([
            "verify", "--out", str(out),
            "--mi-cases", "20", "--matrix-cases", "50",
            "--decoder-cases", "20", "--packing-budget", "2000",
        ])
        assert code == 0
        report = json.loads((out / "verify_report.json").read_text())
        assert report["total_failures"] == 0

    def test_verify_budgets_from_config_with_flag_override(self, tmp_path):
        cfg = tmp_path / "budgets.json"
        cfg.write_text(json.dumps({
            "mi_cases": 12, "matrix_cases": 15, "decoder_cases": 9, "packing_budget": 1200,
        }))
        out = tmp_path / "v"
        code = cli.main(["verify", "--config", str(cfg), "--out", str(out), "--decoder-cases", "4"])
        assert code == 0
        report = json.loads((out / "verify_report.json").read_text())
        assert report["budgets"]["mi_cases"] == 12
        assert report["budgets"]["decoder_cases"] == 4

    def test_verify_config_rejects_unknown_keys(self, tmp_path, capsys):
        cfg = tmp_path / "budgets.json"
        cfg.write_text(json.dumps({"mi_cases": 5, "oops": 1}))
        assert cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == 1
        assert "oops" in capsys.readouterr().err

    def test_verify_failure_exit_code(self, tmp_path, monkeypatch):
        # Sabotage one bound so the suite records violations.
        monkeypatch.setattr(fano, "mi_bound_product_packing", lambda kl, m, n: -1.0)
        out = tmp_path / "v"
        code = cli.main([
            "verify", "--out", str(out),
            "--mi-cases", "10", "--matrix-cases", "5",
            "--decoder-cases", "5", "--packing-budget", "1000",
        ])
        assert code == 3
        report = json.loads((out / "verify_report.json").read_text())
        assert report["total_failures"] > 0
        failing = [s for s in report["suites"] if s["name"] == "product-packing"][0]
        assert failing["failing_example"] is not None


class TestCliEnvAndPacking:
    def test_env_sample_round_trips(self, tmp_path):
        doc = {
            "d": 3,
            "tau": [0.0, 1.0, 0.5],
            "sigma_theta_sq": 0.2,
            "M": 2,
            "n": 5,
            "k": 4,
            "noise_sq_source": 0.5,
            "noise_sq_novel": 1.0,
            "design_kind": "polynomial",
        }
        path = tmp_path / "env.json"
        path.write_text(json.dumps(doc))
        out = tmp_path / "out"
        assert cli.main(["env", "sample", "--config", str(path), "--out", str(out), "--seed", "11"]) == 0
        env = environment_from_json((out / "environment.json").read_text())
        assert env.num_source == 2 and env.d == 3 and env.seed == 11

    def test_packing_writes_valid_set(self, tmp_path):
        path = tmp_path / "packing.json"
        path.write_text(json.dumps({"d": 2, "delta": 0.25, "budget": 5000}))
        out = tmp_path / "out"
        assert cli.main(["packing", "--config", str(path), "--out", str(out), "--seed", "3"]) == 0
        ps = fano.packing_from_dict(json.loads((out / "packing.json").read_text()))
        assert ps.size >= 4

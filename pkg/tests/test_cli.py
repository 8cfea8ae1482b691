"""Command-line interface: subcommands, exit codes, file outputs, and
byte-for-byte reproducibility."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest
from click.testing import CliRunner

from cohopt.cli import main

from conftest import condiments_table


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scenario_path(tmp_path):
    return _write_scenario(tmp_path / "condiments.json", eps=0.0)


@pytest.fixture
def smoothed_path(tmp_path):
    return _write_scenario(tmp_path / "condiments_smoothed.json", eps=0.01)


def _write_scenario(path: Path, eps: float) -> str:
    payload = {
        "partition": {
            "contexts": [
                {
                    "name": "burger",
                    "behaviors": ["burger_mayo", "burger_mustard", "burger_other"],
                },
                {
                    "name": "fries",
                    "behaviors": ["fries_mayo", "fries_ketchup", "fries_other"],
                },
            ]
        },
        "system": {
            "type": "joint_table",
            "table": condiments_table(eps).tolist(),
            "epsilon": 0.0,
        },
        "ground_truth": ["burger_mayo", "fries_mayo"],
    }
    path.write_text(json.dumps(payload))
    return str(path)


def _read_rows(path: Path) -> list[str]:
    return [
        line
        for line in path.read_text().splitlines()
        if line and not line.startswith("#")
    ]


class TestCoherenceCommand:
    def test_consistent_pair(self, runner, scenario_path):
        result = runner.invoke(
            main, ["coherence", scenario_path, "--policy", "burger_mayo,fries_mayo"]
        )
        assert result.exit_code == 0
        chi = float(result.output.split("chi_bits=")[1].splitlines()[0])
        assert abs(chi - math.log2(0.3)) <= 1e-9

    def test_mustard_ketchup_pair(self, runner, scenario_path):
        result = runner.invoke(
            main,
            ["coherence", scenario_path, "--policy", "burger_mustard,fries_ketchup"],
        )
        assert result.exit_code == 0
        chi = float(result.output.split("chi_bits=")[1].splitlines()[0])
        assert abs(chi - math.log2(0.175)) <= 1e-9
        f_mp = float(result.output.split("f_mp_bits=")[1].splitlines()[0])
        assert abs(f_mp - (-2.0)) <= 1e-9

    def test_missing_file_exits_2_with_path(self, runner, tmp_path):
        missing = str(tmp_path / "nope.json")
        result = runner.invoke(
            main, ["coherence", missing, "--policy", "burger_mayo,fries_mayo"]
        )
        assert result.exit_code == 2
        assert "nope.json" in result.output

    def test_unknown_behavior_exits_2(self, runner, scenario_path):
        result = runner.invoke(
            main, ["coherence", scenario_path, "--policy", "burger_mayo,tartar"]
        )
        assert result.exit_code == 2


class TestEnumerateCommand:
    def test_beta_one_table(self, runner, scenario_path, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["enumerate", scenario_path, "--beta", "1", "--out", str(out)],
        )
        assert result.exit_code == 0
        rows = _read_rows(out / "xbeta.csv")
        header, top = rows[0], rows[1]
        assert header == "policy,mass,coherence_bits"
        name, mass, chi = top.split(",")
        assert name == "burger_mayo|fries_mayo"
        assert abs(float(mass) - 0.3) <= 1e-9
        assert (out / "config.json").exists()

    def test_infinite_beta_single_supported_row(self, runner, scenario_path, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["enumerate", scenario_path, "--beta", "inf", "--out", str(out)],
        )
        assert result.exit_code == 0
        rows = _read_rows(out / "xbeta.csv")[1:]
        masses = [float(row.split(",")[1]) for row in rows]
        assert sum(1 for m in masses if m > 0) == 1
        assert masses[0] == 1.0

    def test_cap_exceeded_exits_4(self, runner, scenario_path, tmp_path):
        result = runner.invoke(
            main,
            ["enumerate", scenario_path, "--cap", "3", "--out", str(tmp_path / "o")],
        )
        assert result.exit_code == 4


class TestRunCommand:
    def test_gibbs_writes_trajectory_and_tv_report(
        self, runner, smoothed_path, tmp_path
    ):
        out = tmp_path / "run"
        result = runner.invoke(
            main,
            [
                "run", smoothed_path, "--method", "gibbs", "--steps", "20000",
                "--seed", "7", "--out", str(out),
            ],
        )
        assert result.exit_code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["tv_to_exact"] <= 0.05
        rows = _read_rows(out / "trajectory.csv")
        assert len(rows) == 20002  # header + steps + 1

    def test_seed_repeat_byte_identical(self, runner, smoothed_path, tmp_path):
        args = ["run", smoothed_path, "--method", "gibbs", "--steps", "500", "--seed", "3"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert runner.invoke(main, args + ["--out", str(out1)]).exit_code == 0
        assert runner.invoke(main, args + ["--out", str(out2)]).exit_code == 0
        for name in ("trajectory.csv", "report.json", "config.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_debate_wrong_arity_exits_2(self, runner, tmp_path):
        path = tmp_path / "three.json"
        payload = {
            "partition": {
                "contexts": [
                    {"name": f"c{i}", "behaviors": [f"c{i}_a", f"c{i}_b"]}
                    for i in range(3)
                ]
            },
            "system": {
                "type": "mixture",
                "latent_weights": [1.0],
                "emissions": [[[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]]],
            },
        }
        path.write_text(json.dumps(payload))
        result = runner.invoke(
            main,
            ["run", str(path), "--method", "debate", "--out", str(tmp_path / "o")],
        )
        assert result.exit_code == 2

    def test_bootstrap_trace(self, runner, smoothed_path, tmp_path):
        out = tmp_path / "boot"
        result = runner.invoke(
            main,
            [
                "run", smoothed_path, "--method", "bootstrap", "--seed", "5",
                "--order", "burger,fries", "--out", str(out),
            ],
        )
        assert result.exit_code == 0
        rows = _read_rows(out / "bootstrap.csv")
        assert rows[0] == "step,context,behavior,probability"
        assert len(rows) == 3

    def test_icm_report(self, runner, scenario_path, tmp_path):
        out = tmp_path / "icm"
        result = runner.invoke(
            main,
            ["run", scenario_path, "--method", "icm", "--out", str(out)],
        )
        assert result.exit_code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["policy"] == ["burger_mayo", "fries_mayo"]


class TestBoundsCommand:
    def test_uniform_bound_report(self, runner, tmp_path):
        out = tmp_path / "bounds"
        result = runner.invoke(
            main,
            [
                "bounds", "--bound", "uniform", "--chi", "-1.7369656",
                "--n", "100", "--delta", "0.05", "--sign", "corrected",
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0
        report = json.loads((out / "bound.json").read_text())
        assert report["valid"]
        assert report["inputs"]["sign_convention"] == "corrected"

    def test_malformed_delta_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main,
            [
                "bounds", "--bound", "uniform", "--chi", "-1.0",
                "--n", "100", "--delta", "2.0", "--out", str(tmp_path / "o"),
            ],
        )
        assert result.exit_code == 2

    def test_missing_required_input_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["bounds", "--bound", "accuracy", "--n", "10", "--delta", "0.1",
             "--out", str(tmp_path / "o")],
        )
        assert result.exit_code == 2

    def test_sample_count_flagged_conjectural(self, runner, tmp_path):
        out = tmp_path / "sc"
        result = runner.invoke(
            main,
            [
                "bounds", "--bound", "sample-count",
                "--mean-pretrain-coh", "-2.0", "--mean-posttrain-coh", "-1.5",
                "--pretrain-error", "0.2", "--pretrain-count", "200",
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0
        report = json.loads((out / "bound.json").read_text())
        assert "conjectural" in report["note"]
        assert abs(report["value"] - 0.25 * (4.0 / 1.5) / 0.64 * 200) <= 1e-9


class TestMcCommand:
    def test_writes_trials_and_summary(self, runner, tmp_path):
        out = tmp_path / "mc"
        result = runner.invoke(
            main,
            ["mc", "--trials", "50", "--seed", "1", "--out", str(out)],
        )
        assert result.exit_code == 0
        rows = _read_rows(out / "trials.csv")
        assert rows[0] == (
            "seed,violated,max_gap,bound_at_max,violated_paper,"
            "srm_accuracy,accuracy_floor,srm_violated"
        )
        assert len(rows) == 51
        summary = json.loads((out / "summary.json").read_text())
        assert summary["hold_rate_corrected"] >= 0.87
        assert summary["hold_rate_srm_floor"] >= 0.87
        assert "not asserted" in summary["note"]

    def test_byte_identical_rerun(self, runner, tmp_path):
        args = ["mc", "--trials", "20", "--seed", "9"]
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        assert runner.invoke(main, args + ["--out", str(out1)]).exit_code == 0
        assert runner.invoke(main, args + ["--out", str(out2)]).exit_code == 0
        assert (out1 / "trials.csv").read_bytes() == (out2 / "trials.csv").read_bytes()


class TestEquivCommand:
    def test_writes_table_and_summary(self, runner, tmp_path):
        out = tmp_path / "equiv"
        result = runner.invoke(
            main,
            [
                "equiv", "--lattice", "0,2,4", "--n-seeds", "2",
                "--n-contexts", "4", "--out", str(out),
            ],
        )
        assert result.exit_code == 0
        rows = _read_rows(out / "equiv.csv")
        assert rows[0] == "s_a,seed,acc_coherence,acc_srm,gap,recommended"
        assert len(rows) == 7  # header + 3 lattice points x 2 seeds
        summary = json.loads((out / "summary.json").read_text())
        assert "argmin_gap" in summary

    def test_bad_lattice_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main, ["equiv", "--lattice", "a,b", "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 2


class TestCheckCommand:
    def test_all_sweeps_pass(self, runner):
        result = runner.invoke(main, ["check", "--cases", "25", "--seed", "0"])
        assert result.exit_code == 0
        assert result.output.count("PASS") == 4
        assert "FAIL" not in result.output


class TestOutputDirEnvVar:
    def test_env_var_sets_default_out(self, runner, tmp_path, monkeypatch):
        target = tmp_path / "from-env"
        monkeypatch.setenv("COHOPT_OUTPUT_DIR", str(target))
        result = runner.invoke(
            main,
            ["bounds", "--bound", "uniform", "--chi", "-1.0", "--n", "10",
             "--delta", "0.1"],
        )
        assert result.exit_code == 0
        assert (target / "bound.json").exists()

    def test_flag_overrides_env_var(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("COHOPT_OUTPUT_DIR", str(tmp_path / "ignored"))
        explicit = tmp_path / "explicit"
        result = runner.invoke(
            main,
            ["bounds", "--bound", "uniform", "--chi", "-1.0", "--n", "10",
             "--delta", "0.1", "--out", str(explicit)],
        )
        assert result.exit_code == 0
        assert (explicit / "bound.json").exists()
        assert not (tmp_path / "ignored").exists()


class TestScenarioValidation:
    def test_unknown_top_level_key_cites_key(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        payload = json.loads(Path(_write_scenario(tmp_path / "t.json", 0.0)).read_text())
        payload["extra"] = 1
        path.write_text(json.dumps(payload))
        result = runner.invoke(
            main, ["coherence", str(path), "--policy", "burger_mayo,fries_mayo"]
        )
        assert result.exit_code == 2
        assert "extra" in result.output

    def test_bad_emission_rows_cite_path(self, runner, tmp_path):
        path = tmp_path / "bad2.json"
        payload = {
            "partition": {
                "contexts": [
                    {"name": "a", "behaviors": ["a_x", "a_y"]},
                ]
            },
            "system": {
                "type": "mixture",
                "latent_weights": [1.0],
                "emissions": [[[0.9, 0.2]]],
            },
        }
        path.write_text(json.dumps(payload))
        result = runner.invoke(
            main, ["coherence", str(path), "--policy", "a_x"]
        )
        assert result.exit_code == 2
        assert "system" in result.output

"""Config parsing, experiment orchestration and CLI contract tests."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from surrhmc.cli import (
    ConfigError,
    config_hash,
    main,
    parse_config,
    parse_config_text,
    serialize_config,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


TINY_HMC = """
[experiment]
seed = 3
[target]
kind = gaussian
dim = 2
minor-variance = 1.0
[sampler]
kind = hmc
step-size = 0.4
leapfrog-steps = 5
burnin = 20
samples = 60
"""

TINY_RNS = """
[experiment]
seed = 3
[target]
kind = gaussian
dim = 2
minor-variance = 1.0
[sampler]
kind = rns-hmc
step-size = 0.4
leapfrog-steps = 5
warmup = 10
burnin = 60
samples = 80
[surrogate]
hidden-units = 12
"""


class TestParseConfig:
    def test_shipped_lr_sim_recipe(self):
        cfg = parse_config(CONFIGS / "lr_sim.cfg")
        assert cfg.target.kind == "logistic-sim"
        assert cfg.target.dim == 50
        assert cfg.target.observations == 100_000
        assert cfg.sampler.step_size == 0.045
        assert cfg.sampler.leapfrog_steps == 6
        assert cfg.surrogate.hidden_units == 2000

    @pytest.mark.parametrize(
        "name", ["banana.cfg", "gaussian32.cfg", "lr_adaptive.cfg", "banana_gp.cfg"]
    )
    def test_all_shipped_configs_parse(self, name):
        cfg = parse_config(CONFIGS / name)
        assert cfg.seed is not None

    def test_negative_step_size_rejected(self, tmp_path):
        path = write_config(tmp_path, TINY_HMC.replace("step-size = 0.4", "step-size = -1"))
        with pytest.raises(ConfigError, match="step-size"):
            parse_config(path)

    def test_unknown_key_named(self, tmp_path):
        path = write_config(tmp_path, TINY_HMC + "wobble = 3\n")
        with pytest.raises(ConfigError, match="wobble"):
            parse_config(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = write_config(tmp_path, TINY_HMC + "[mystery]\nx = 1\n")
        with pytest.raises(ConfigError, match="mystery"):
            parse_config(path)

    def test_missing_required_key(self, tmp_path):
        path = write_config(tmp_path, TINY_HMC.replace("seed = 3", "; no seed"))
        with pytest.raises(ConfigError, match="seed"):
            parse_config(path)

    def test_type_error_reports_location(self, tmp_path):
        path = write_config(tmp_path, TINY_HMC.replace("leapfrog-steps = 5", "leapfrog-steps = five"))
        with pytest.raises(ConfigError, match=r"\[sampler\] leapfrog-steps"):
            parse_config(path)

    def test_surrogate_sampler_needs_section(self, tmp_path):
        path = write_config(tmp_path, TINY_HMC.replace("kind = hmc", "kind = rns-hmc"))
        with pytest.raises(ConfigError, match="surrogate"):
            parse_config(path)

    def test_surrogate_section_requires_surrogate_sampler(self, tmp_path):
        path = write_config(tmp_path, TINY_HMC + "[surrogate]\nhidden-units = 5\n")
        with pytest.raises(ConfigError, match="only valid"):
            parse_config(path)

    def test_rns_burnin_must_exceed_warmup(self, tmp_path):
        path = write_config(tmp_path, TINY_RNS.replace("warmup = 10", "warmup = 60"))
        with pytest.raises(ConfigError, match="burnin > warmup"):
            parse_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config(tmp_path / "none.cfg")

    def test_round_trip_identity(self, tmp_path):
        for name in ["lr_sim.cfg", "banana.cfg", "lr_adaptive.cfg", "banana_gp.cfg"]:
            cfg = parse_config(CONFIGS / name)
            assert parse_config_text(serialize_config(cfg)) == cfg

    def test_hash_stable(self):
        a = parse_config(CONFIGS / "banana.cfg")
        b = parse_config(CONFIGS / "banana.cfg")
        assert config_hash(a) == config_hash(b)


def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestRunCommand:
    def test_outputs_and_determinism(self, tmp_path):
        cfg_path = write_config(tmp_path, TINY_HMC)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(cfg_path), "--out", str(out_a)]) == 0
        assert main(["run", "--config", str(cfg_path), "--out", str(out_b)]) == 0
        header, rows_a = read_trace(out_a / "trace.csv")
        _, rows_b = read_trace(out_b / "trace.csv")
        assert header == ["iter", "phase", "accepted", "potential", "seconds", "q_1", "q_2"]
        assert len(rows_a) == 80
        # Byte-identical modulo the wall-clock column.
        seconds_idx = header.index("seconds")
        for ra, rb in zip(rows_a, rows_b):
            del ra[seconds_idx], rb[seconds_idx]
            assert ra == rb
        report = json.loads((out_a / "report.json").read_text())
        assert set(report) >= {"acceptance_rate", "ess", "min_ess_per_second", "divergences"}
        manifest = json.loads((out_a / "manifest.json").read_text())
        assert manifest["config_sha256"] == config_hash(parse_config(cfg_path))
        assert (out_b / "manifest.json").read_text() == (out_a / "manifest.json").read_text()

    def test_seed_override_changes_chain(self, tmp_path):
        cfg_path = write_config(tmp_path, TINY_HMC)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["run", "--config", str(cfg_path), "--out", str(out_a)])
        main(["run", "--config", str(cfg_path), "--out", str(out_b), "--seed", "77"])
        _, rows_a = read_trace(out_a / "trace.csv")
        _, rows_b = read_trace(out_b / "trace.csv")
        assert rows_a[5][5] != rows_b[5][5]

    def test_dry_run_writes_nothing(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, TINY_HMC)
        out = tmp_path / "dry"
        assert main(["run", "--config", str(cfg_path), "--out", str(out), "--dry-run"]) == 0
        assert not out.exists()
        plan = json.loads(capsys.readouterr().out)
        assert plan["plan"]["sampler"] == "hmc"

    def test_surrogate_run_writes_checkpoint(self, tmp_path):
        cfg_path = write_config(tmp_path, TINY_RNS)
        out = tmp_path / "rns"
        assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        from surrhmc import load_surrogate

        model = load_surrogate(out / "surrogate.json")
        assert model.nodes.n_hidden == 12
        rows = read_trace(out / "trace.csv")[1]
        phases = {row[1] for row in rows}
        assert phases == {"exploration", "exploitation"}

    def test_multi_chain_merges_reports(self, tmp_path):
        cfg_path = write_config(tmp_path, TINY_HMC)
        out = tmp_path / "multi"
        assert main(["run", "--config", str(cfg_path), "--out", str(out), "--chains", "2"]) == 0
        assert (out / "trace_0.csv").exists() and (out / "trace_1.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert len(report["chains"]) == 2
        assert "aggregate" in report
        _, rows_0 = read_trace(out / "trace_0.csv")
        _, rows_1 = read_trace(out / "trace_1.csv")
        assert rows_0[5][5] != rows_1[5][5]  # independent streams

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, TINY_HMC.replace("step-size = 0.4", "step-size = 0"))
        assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "x")]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "config"

    def test_divergence_budget_exit_code(self, tmp_path):
        # A wildly unstable discretization overflows the state, so every
        # trajectory is a counted divergence and the zero budget trips.
        text = TINY_HMC.replace("step-size = 0.4", "step-size = 1e6")
        text = text.replace("leapfrog-steps = 5", "leapfrog-steps = 30")
        text = text.replace("seed = 3", "seed = 3\ndivergence-budget = 0")
        cfg_path = write_config(tmp_path, text)
        code = main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "d")])
        assert code == 3
        assert (tmp_path / "d" / "trace.csv").exists()

    def test_missing_output_dir_is_config_error(self, tmp_path):
        cfg_path = write_config(tmp_path, TINY_HMC)
        assert main(["run", "--config", str(cfg_path)]) == 2


class TestValidateCommand:
    def test_ok(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, TINY_RNS)
        assert main(["validate", "--config", str(cfg_path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ok"] is True

    def test_bad(self, tmp_path):
        cfg_path = write_config(tmp_path, TINY_RNS + "nonsense = 1\n")
        assert main(["validate", "--config", str(cfg_path)]) == 2


class TestFixtureCommand:
    LR_FIXTURE = """
[experiment]
seed = 12
[target]
kind = logistic-sim
dim = 4
observations = 300
[sampler]
kind = hmc
step-size = 0.3
leapfrog-steps = 4
samples = 50
"""

    def test_lr_data_fixture(self, tmp_path):
        cfg_path = write_config(tmp_path, self.LR_FIXTURE)
        out = tmp_path / "fx"
        assert main(["fixture", "lr-data", "--config", str(cfg_path), "--out", str(out)]) == 0
        header, rows = read_trace(out / "lr_data.csv")
        assert header[-1] == "label"
        assert all(row[0] == "0.1" for row in rows)
        provenance = json.loads((out / "lr_data.provenance.json").read_text())
        assert provenance["data_seed"] == 12
        assert provenance["observations"] == 300

    def test_lr_data_fixture_hash_stable(self, tmp_path):
        cfg_path = write_config(tmp_path, self.LR_FIXTURE)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["fixture", "lr-data", "--config", str(cfg_path), "--out", str(out_a)])
        main(["fixture", "lr-data", "--config", str(cfg_path), "--out", str(out_b)])
        assert (out_a / "lr_data.csv").read_bytes() == (out_b / "lr_data.csv").read_bytes()
        assert (out_a / "lr_data.provenance.json").read_bytes() == (
            out_b / "lr_data.provenance.json"
        ).read_bytes()

    def test_reference_mean_fixture(self, tmp_path):
        text = """
[experiment]
seed = 4
[target]
kind = gaussian
dim = 1
[sampler]
kind = hmc
step-size = 0.6
leapfrog-steps = 5
samples = 100
[fixture]
reference-iterations = 20000
reference-burnin = 500
"""
        cfg_path = write_config(tmp_path, text)
        out = tmp_path / "ref"
        assert main(["fixture", "reference-mean", "--config", str(cfg_path), "--out", str(out)]) == 0
        payload = json.loads((out / "reference_mean.json").read_text())
        assert abs(payload["mean"][0]) < 0.02
        assert payload["provenance"]["iterations"] == 20000

    def test_wrong_target_kind_rejected(self, tmp_path):
        cfg_path = write_config(tmp_path, TINY_HMC)
        assert main(["fixture", "lr-data", "--config", str(cfg_path), "--out", str(tmp_path / "x")]) == 2


class TestCompareCommand:
    def test_emits_row_pair_with_speedup(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, TINY_RNS)
        out = tmp_path / "cmp"
        assert main(["compare", "--config", str(cfg_path), "--out", str(out)]) == 0
        payload = json.loads((out / "comparison.json").read_text())
        assert [row["method"] for row in payload["rows"]] == ["hmc", "rns-hmc"]
        assert payload["rows"][0]["speedup_vs_baseline"] == 1.0
        assert payload["rows"][1]["speedup_vs_baseline"] > 0
        table = capsys.readouterr().out
        assert "speedup" in table and "rns-hmc" in table

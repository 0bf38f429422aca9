"""Command-line behavior: exit codes, report files, overrides, replay."""

import json

import pytest

from mixtwin.cli import (
    EXIT_AGENT_LOST,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SETTLE,
    main,
)

BASE_SCENARIO = {
    "name": "cli-mini",
    "seed": 11,
    "laps": 1,
    "base_speed_kmh": 10.08,
    "settle": {"band_frac": 0.05, "hold_s": 1.0, "timeout_s": 30.0},
    "perturbation": {
        "kind": "HalfSine",
        "trigger_point": "C",
        "trigger_lap": 1,
        "duration": 3.5,
        "amplitude_kmh": 3.02,
    },
    "platoon": [
        {"vehicle_id": "1", "kind": "EmulatedPhysical", "role": "Head",
         "source": "HeadProfile"},
        {"vehicle_id": "2", "kind": "Virtual", "role": "CAV",
         "source": "CACC"},
    ],
}


def write_spec(tmp_path, name="mini.json", **overrides):
    doc = json.loads(json.dumps(BASE_SCENARIO))
    doc.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestValidate:
    def test_clean_spec_exits_zero(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        assert main(["validate", spec]) == EXIT_OK
        assert "ok" in capsys.readouterr().out

    def test_each_violation_printed(self, tmp_path, capsys):
        doc = json.loads(json.dumps(BASE_SCENARIO))
        # two statically detectable problems at once
        doc["platoon"][1]["vehicle_id"] = "1"
        doc["initial_gap"] = 2.0
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        assert main(["validate", str(path)]) == EXIT_CONFIG
        out = capsys.readouterr().out
        violations = [line for line in out.splitlines()
                      if line.startswith("violation:")]
        assert len(violations) >= 2, f"expected >=2 violation lines, got:\n{out}"
        assert any("unique" in v for v in violations), violations
        assert any("collision threshold" in v for v in violations), violations

    def test_unknown_key_names_the_field(self, tmp_path, capsys):
        doc = json.loads(json.dumps(BASE_SCENARIO))
        doc["platoon"][1]["control"] = "CACC"
        path = tmp_path / "key.json"
        path.write_text(json.dumps(doc))
        assert main(["validate", str(path)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "control" in err, f"field name missing from: {err}"

    def test_malformed_json_names_the_line(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"name": "x", ??}')
        assert main(["validate", str(path)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "line" in err, f"line info missing from: {err}"

    def test_missing_file(self, capsys):
        assert main(["validate", "/no/such/file.json"]) == EXIT_CONFIG
        assert "file.json" in capsys.readouterr().err


class TestRun:
    def test_lockstep_writes_report(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        out = tmp_path / "out"
        assert main(["run", spec, "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["scenario"] == "cli-mini"
        assert summary["seed"] == 11
        assert (out / "pool_log.csv").exists()
        assert (out / "vehicle_1.csv").exists()
        assert (out / "vehicle_2.csv").exists()
        stdout = capsys.readouterr().out
        assert "run complete" in stdout and "summary.json" in stdout

    def test_seed_flag_overrides_spec(self, tmp_path):
        spec = write_spec(tmp_path)
        out = tmp_path / "seeded"
        assert main(["run", spec, "--out", str(out), "--seed", "99"]) == EXIT_OK
        assert json.loads((out / "summary.json").read_text())["seed"] == 99

    def test_env_seed_when_flag_absent(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MIXTWIN_SEED", "55")
        spec = write_spec(tmp_path)
        out = tmp_path / "env"
        assert main(["run", spec, "--out", str(out)]) == EXIT_OK
        assert json.loads((out / "summary.json").read_text())["seed"] == 55

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MIXTWIN_SEED", "55")
        spec = write_spec(tmp_path)
        out = tmp_path / "both"
        assert main(["run", spec, "--out", str(out), "--seed", "77"]) == EXIT_OK
        assert json.loads((out / "summary.json").read_text())["seed"] == 77

    def test_same_seed_byte_identical_reports(self, tmp_path):
        spec = write_spec(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", spec, "--out", str(out_a), "--seed", "5"]) == EXIT_OK
        assert main(["run", spec, "--out", str(out_b), "--seed", "5"]) == EXIT_OK
        assert ((out_a / "summary.json").read_bytes()
                == (out_b / "summary.json").read_bytes())
        assert ((out_a / "pool_log.csv").read_bytes()
                == (out_b / "pool_log.csv").read_bytes())

    def test_non_integer_seed(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        assert main(["run", spec, "--seed", "lots"]) == EXIT_CONFIG
        assert "--seed" in capsys.readouterr().err

    def test_settling_timeout_exits_two(self, tmp_path, capsys):
        spec = write_spec(tmp_path, name="stuck.json",
                          initial_gap=30.0,
                          settle={"band_frac": 0.05, "hold_s": 1.0,
                                  "timeout_s": 0.5})
        out = tmp_path / "stuck"
        assert main(["run", spec, "--out", str(out)]) == EXIT_SETTLE
        assert "settling timeout" in capsys.readouterr().err

    def test_distributed_bad_endpoint(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        code = main(["run", spec, "--mode", "distributed", "--hub", "nonsense"])
        assert code == EXIT_CONFIG
        assert "nonsense" in capsys.readouterr().err


class TestReplayCommand:
    @pytest.fixture()
    def pool_log(self, tmp_path):
        spec = write_spec(tmp_path)
        out = tmp_path / "rec"
        assert main(["run", spec, "--out", str(out)]) == EXIT_OK
        return str(out / "pool_log.csv")

    def test_factor_zero_sends_final_frame_only(self, pool_log, capsys):
        assert main(["replay", pool_log, "--factor", "0",
                     "--wait", "0"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "1 broadcast(s)" in out, out

    def test_rejects_non_log_file(self, pool_log, tmp_path, capsys):
        bogus = tmp_path / "rec" / "summary.json"
        assert main(["replay", str(bogus), "--factor", "0",
                     "--wait", "0"]) == EXIT_CONFIG
        assert "not a pool log" in capsys.readouterr().err

    def test_rejects_negative_factor(self, pool_log, capsys):
        assert main(["replay", pool_log, "--factor", "-1",
                     "--wait", "0"]) == EXIT_CONFIG
        assert "factor" in capsys.readouterr().err

    def test_rejects_missing_log(self, capsys):
        assert main(["replay", "/no/log.csv", "--factor", "0",
                     "--wait", "0"]) == EXIT_CONFIG


class TestLauncherArgChecks:
    def test_agent_index_out_of_range(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        code = main(["agent", spec, "--hub", "127.0.0.1:1", "--index", "7"])
        assert code == EXIT_CONFIG
        assert "--index" in capsys.readouterr().err

    def test_agent_unreachable_hub(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        code = main(["agent", spec, "--hub", "127.0.0.1:9", "--index", "0"])
        assert code == EXIT_CONFIG
        assert "connection" in capsys.readouterr().err.lower()

    def test_controller_rank_out_of_range(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        code = main(["controller", spec, "--hub", "127.0.0.1:1",
                     "--controllers", "2", "--rank", "9"])
        assert code == EXIT_CONFIG
        assert "--rank" in capsys.readouterr().err

    def test_agent_bad_endpoint_shape(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        assert main(["agent", spec, "--hub", "nowhere"]) == EXIT_CONFIG

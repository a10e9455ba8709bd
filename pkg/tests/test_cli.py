"""CLI commands, file formats, exit codes."""
import json

import numpy as np
import pytest

from qsts import (
    CorrectionOp,
    Forced,
    ProtocolConfig,
    SecretState,
    random_secret,
    run_protocol,
)
from qsts.cli import (
    load_secret,
    load_transcript,
    main,
    parse_forced,
    save_secret,
    save_transcript,
)


class TestSecretFiles:
    def test_round_trip_lossless(self, tmp_path):
        secret = random_secret(2, np.random.default_rng(71))
        path = tmp_path / "secret.json"
        save_secret(path, secret)
        loaded = load_secret(path)
        np.testing.assert_array_equal(loaded.amplitudes, secret.amplitudes)

    def test_mild_denormalization_renormalized_with_warning(self, tmp_path, capsys):
        path = tmp_path / "secret.json"
        amps = np.array([1.0005, 0.0], dtype=complex)
        path.write_text(
            json.dumps({"m": 1, "amplitudes": [[z.real, z.imag] for z in amps]})
        )
        loaded = load_secret(path)
        assert "renormalizing" in capsys.readouterr().err
        assert np.sum(np.abs(loaded.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_severe_denormalization_rejected(self, tmp_path):
        path = tmp_path / "secret.json"
        path.write_text(json.dumps({"m": 1, "amplitudes": [[1.01, 0.0], [0.0, 0.0]]}))
        with pytest.raises(ValueError, match="norm"):
            load_secret(path)

    def test_wrong_length_rejected(self, tmp_path):
        path = tmp_path / "secret.json"
        path.write_text(json.dumps({"m": 2, "amplitudes": [[1.0, 0.0]]}))
        with pytest.raises(ValueError, match="amplitudes"):
            load_secret(path)


class TestTranscriptFiles:
    def test_round_trip_equality(self, tmp_path):
        secret = random_secret(2, np.random.default_rng(5))
        config = ProtocolConfig(m=2, n=2, seed=321)
        transcript = run_protocol(config, secret)
        path = tmp_path / "transcript.json"
        save_transcript(path, transcript)
        assert load_transcript(path) == transcript

    def test_round_trip_with_forced_policy(self, tmp_path):
        secret = random_secret(1, np.random.default_rng(5))
        forced = parse_forced("PsiMinus;-", 1, 1)
        config = ProtocolConfig(m=1, n=1, outcome_policy=forced)
        transcript = run_protocol(config, secret)
        path = tmp_path / "transcript.json"
        save_transcript(path, transcript)
        assert load_transcript(path) == transcript


class TestParseForced:
    def test_example_grammar(self):
        forced = parse_forced("PhiPlus,PhiPlus;+,-", 2, 1)
        assert isinstance(forced, Forced)
        names = [o.value for o in forced.outcomes]
        assert names == ["PhiPlus", "PhiPlus", "+", "-"]

    def test_controller_rows_transpose_to_group_major(self):
        # Two controllers, rows "+,-" and "-,-": group-major order
        # interleaves them per group.
        forced = parse_forced("PhiPlus,PsiPlus;+,-;-,-", 2, 2)
        signs = [o.value for o in forced.outcomes[2:]]
        assert signs == ["+", "-", "-", "-"]

    def test_bad_inputs(self):
        with pytest.raises(ValueError, match="controller rows"):
            parse_forced("PhiPlus;+;+", 1, 1)
        with pytest.raises(ValueError, match="Bell outcomes"):
            parse_forced("PhiUps;+", 1, 1)
        with pytest.raises(ValueError, match="signs"):
            parse_forced("PhiPlus;up", 1, 1)


class TestRunCommand:
    def test_successful_run(self, tmp_path, capsys):
        out = tmp_path / "t.json"
        code = main(["run", "--m", "2", "--n", "1", "--seed", "42", "--out", str(out)])
        captured = capsys.readouterr().out
        assert code == 0
        assert captured.startswith("fidelity=1.0")
        assert "branch_probability=" in captured
        assert out.exists()

    def test_byte_identical_reruns(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        main(["run", "--m", "2", "--n", "2", "--seed", "9", "--out", str(out1)])
        main(["run", "--m", "2", "--n", "2", "--seed", "9", "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_capacity_exit_code(self, capsys):
        assert main(["run", "--m", "5", "--n", "5"]) == 2
        assert "error" in capsys.readouterr().err

    def test_env_cap_lowering(self, capsys, monkeypatch):
        monkeypatch.setenv("QSTS_MAX_QUBITS", "8")
        assert main(["run", "--m", "2", "--n", "2"]) == 2

    def test_forced_outcomes_reach_transcript(self, tmp_path):
        out = tmp_path / "t.json"
        code = main(
            ["run", "--m", "2", "--n", "1", "--forced", "PhiPlus,PhiPlus;+,-",
             "--out", str(out)]
        )
        assert code == 0
        transcript = load_transcript(out)
        assert transcript.corrections == (CorrectionOp.U0, CorrectionOp.U1)

    def test_secret_file_used(self, tmp_path, capsys):
        path = tmp_path / "secret.json"
        save_secret(path, SecretState([1.0, 0.0]))
        code = main(["run", "--m", "1", "--n", "1", "--secret", str(path)])
        assert code == 0

    def test_secret_size_mismatch(self, tmp_path, capsys):
        path = tmp_path / "secret.json"
        save_secret(path, SecretState([1.0, 0.0]))
        assert main(["run", "--m", "2", "--n", "1", "--secret", str(path)]) == 2


class TestVerifyCommand:
    def test_tables_suite(self, capsys):
        code = main(["verify", "--suite", "tables"])
        record = json.loads(capsys.readouterr().out.strip())
        assert code == 0
        assert record["rows_checked"] == 36
        assert record["mismatches"] == 0
        assert record["ok"] is True

    def test_enumerate_suite_single_config(self, capsys):
        code = main(["verify", "--suite", "enumerate", "--m", "2", "--n", "2"])
        record = json.loads(capsys.readouterr().out.strip())
        assert code == 0
        assert record["branches"] == 256
        assert record["min_fidelity"] >= 1 - 1e-9
        assert abs(record["probability_sum"] - 1.0) <= 1e-9

    def test_threshold_suite_single_config(self, capsys):
        code = main(["verify", "--suite", "threshold", "--m", "2", "--n", "2"])
        record = json.loads(capsys.readouterr().out.strip())
        assert code == 0
        assert record["success"] == "1/4"
        assert record["ok"] is True


class TestMetricsCommand:
    def test_output(self, capsys):
        code = main(["metrics", "--n", "1", "--m", "2"])
        lines = capsys.readouterr().out.splitlines()
        assert code == 0
        assert lines == ["q_u=4", "q_t=4", "b_t=6", "eta_q=1", "eta_t=2/5"]

    def test_two_controllers(self, capsys):
        main(["metrics", "--n", "2", "--m", "3"])
        lines = capsys.readouterr().out.splitlines()
        assert "q_u=9" in lines
        assert "eta_t=3/7" in lines

    def test_invalid_n(self, capsys):
        assert main(["metrics", "--n", "0"]) == 2

"""CLI contract: flags, exit codes, formats, determinism."""
import json

import pytest

from cfclab.cli import EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestReduced:
    def test_paper_table_passes(self, capsys):
        code, out = run_cli(capsys, "reduced", "--paper-table")
        assert code == EXIT_OK
        assert "all constants reproduced" in out

    def test_paper_table_json(self, capsys):
        code, out = run_cli(capsys, "reduced", "--paper-table", "--format", "json")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["all_pass"] is True
        names = [r["name"] for r in payload["rows"]]
        assert "D_vio" in names and "n_gamma" in names

    def test_zero_bit_d0_probability(self, capsys):
        code, out = run_cli(
            capsys, "reduced", "--bit", "0", "--theta1", "0", "--theta2", "0",
            "--format", "json",
        )
        assert code == EXIT_OK
        payload = json.loads(out)
        p_d0 = payload["bins"]["d0"]["H"] + payload["bins"]["d0"]["V"]
        assert abs(p_d0 - 0.04) < 1e-12

    def test_one_bit_postselected_fisher_zero(self, capsys):
        code, out = run_cli(
            capsys, "reduced", "--bit", "1", "--postselect", "--format", "json"
        )
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["postselected"]["theta1"]["value"] == 0.0
        assert payload["postselected"]["theta2"]["value"] == 0.0

    def test_non_converged_exits_3(self, capsys):
        code, out = run_cli(
            capsys, "reduced", "--bit", "0", "--theta2", "0.3", "--postselect",
            "--grid", "0.3,0.29", "--format", "json",
        )
        assert code == EXIT_NUMERIC
        payload = json.loads(out)
        assert payload["postselected"]["theta1"]["converged"] is False


class TestFull:
    def test_sum_mode(self, capsys):
        code, out = run_cli(capsys, "full", "-N", "2", "-M", "2", "--format", "json")
        assert code == EXIT_OK
        assert abs(json.loads(out)["d_vio"] - 0.25) < 1e-12

    def test_sum_vs_asymptotic_gap(self, capsys):
        _, out_sum = run_cli(
            capsys, "full", "-N", "100", "-M", "10000", "--mode", "sum",
            "--format", "json",
        )
        _, out_asym = run_cli(
            capsys, "full", "-N", "100", "-M", "10000", "--mode", "asymptotic",
            "--format", "json",
        )
        d_sum = json.loads(out_sum)["d_vio"]
        d_asym = json.loads(out_asym)["d_vio"]
        assert abs(d_asym - d_sum) / d_sum < 0.05
        assert json.loads(out_asym)["regime_valid"] is True

    def test_simulate_matches_sum(self, capsys):
        _, out_sim = run_cli(
            capsys, "full", "-N", "3", "-M", "4", "--mode", "simulate",
            "--format", "json",
        )
        _, out_sum = run_cli(
            capsys, "full", "-N", "3", "-M", "4", "--mode", "sum", "--format", "json"
        )
        assert abs(json.loads(out_sim)["d_vio"] - json.loads(out_sum)["d_vio"]) < 1e-6

    def test_regime_flag_false_outside(self, capsys):
        _, out = run_cli(
            capsys, "full", "-N", "2", "-M", "2", "--mode", "asymptotic",
            "--format", "json",
        )
        assert json.loads(out)["regime_valid"] is False


class TestClassical:
    def test_summary_exit_zero(self, capsys):
        code, out = run_cli(
            capsys, "classical", "--length", "1000", "--seed", "3", "--format", "json"
        )
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["kept_all_counterfactual"] is True
        assert abs(payload["discard_fraction"] - 0.5) < 0.05

    def test_csv_transcript(self, capsys):
        code, out = run_cli(
            capsys, "classical", "--length", "4", "--seed", "0", "--format", "csv"
        )
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "minute,parity,bit,sent,received,kept"
        assert len(lines) == 5

    def test_explicit_message(self, capsys):
        code, out = run_cli(
            capsys, "classical", "--message", "0000", "--format", "json"
        )
        assert code == EXIT_OK
        payload = json.loads(out)
        # even minutes keep 0-bits, odd minutes discard them
        assert payload["discard_count"] == 2


class TestSweep:
    def test_csv_rows_ordered(self, capsys):
        code, out = run_cli(capsys, "sweep", "--n-range", "2:3", "--m-range", "2:6:2")
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "n,m,d_sum,d_asym,rel_gap"
        keys = [tuple(line.split(",")[:2]) for line in lines[1:]]
        assert keys == [
            ("2", "2"), ("2", "4"), ("2", "6"),
            ("3", "2"), ("3", "4"), ("3", "6"),
        ]

    def test_byte_identical_reruns(self, capsys):
        _, first = run_cli(capsys, "sweep", "--n-range", "2:5", "--m-range", "2:8")
        _, second = run_cli(capsys, "sweep", "--n-range", "2:5", "--m-range", "2:8")
        assert first == second

    def test_threaded_run_identical(self, capsys, monkeypatch):
        _, serial = run_cli(capsys, "sweep", "--n-range", "2:6", "--m-range", "2:10")
        monkeypatch.setenv("CFC_LAB_THREADS", "4")
        _, threaded = run_cli(capsys, "sweep", "--n-range", "2:6", "--m-range", "2:10")
        assert serial == threaded


class TestPlumbing:
    def test_usage_error_exit_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["reduced", "--bogus"])
        assert err.value.code == EXIT_USAGE

    def test_missing_subcommand_exit_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == EXIT_USAGE

    def test_config_defaults(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"theta1": 0.1, "format": "json"}')
        code, out = run_cli(capsys, "--config", str(cfg), "reduced", "--bit", "1")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["theta1"] == pytest.approx(0.1)
        assert payload["bit"] == 1

    def test_config_flag_override_wins(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"theta1": 0.1, "format": "json"}')
        code, out = run_cli(
            capsys, "--config", str(cfg), "reduced", "--theta1", "0.2"
        )
        assert json.loads(out)["theta1"] == pytest.approx(0.2)

    def test_unknown_config_key_exit_2(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"frobnicate": 1}')
        with pytest.raises(SystemExit) as err:
            main(["--config", str(cfg), "reduced"])
        assert err.value.code == EXIT_USAGE

    def test_output_file(self, capsys, tmp_path):
        path = tmp_path / "report.json"
        code, out = run_cli(
            capsys, "full", "-N", "2", "-M", "2", "--format", "json",
            "--output", str(path),
        )
        assert code == EXIT_OK
        assert out == ""
        assert abs(json.loads(path.read_text())["d_vio"] - 0.25) < 1e-12

    def test_identical_invocations_byte_identical(self, capsys):
        argv = ("reduced", "--bit", "0", "--theta1", "0.15", "--format", "json")
        _, first = run_cli(capsys, *argv)
        _, second = run_cli(capsys, *argv)
        assert first == second

    def test_bad_grid_rejected(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["reduced", "--grid", "1e-2"])
        assert err.value.code == EXIT_USAGE

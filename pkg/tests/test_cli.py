"""Command-line client: config resolution, file writing, exit codes."""

import os

import pytest
from click.testing import CliRunner

from duophase.cli import main

F1_PASS = "[density]\np = 2\nq = 2.5\n"
F1_FAIL = "[density]\np = 2\nq = 3.5\n"


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigResolution:
    def test_a_config_file_path_is_read(self, runner, tmp_path):
        cfg = write_config(tmp_path, F1_PASS)
        result = runner.invoke(
            main, ["check", "f1", "--config", cfg, "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 0, result.output

    def test_a_recipe_name_is_fetched(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["check", "f1", "--config", "example1", "--out", str(tmp_path / "o")],
        )
        assert result.exit_code == 0, result.output

    def test_an_unknown_recipe_is_a_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["check", "f1", "--config", "nope", "--out", str(tmp_path)]
        )
        assert result.exit_code == 2

    def test_a_broken_config_file_is_a_usage_error(self, runner, tmp_path):
        cfg = write_config(tmp_path, "p = 2\n")
        result = runner.invoke(
            main, ["check", "f1", "--config", cfg, "--out", str(tmp_path)]
        )
        assert result.exit_code == 2
        assert "line 1" in result.output


class TestOutputs:
    def test_files_land_in_the_out_directory(self, runner, tmp_path):
        cfg = write_config(tmp_path, F1_PASS)
        out_dir = tmp_path / "results"
        result = runner.invoke(
            main, ["check", "f1", "--config", cfg, "--out", str(out_dir)]
        )
        assert result.exit_code == 0
        assert sorted(os.listdir(out_dir)) == ["report.csv", "report.txt"]
        assert "wrote" in result.output

    def test_seed_flag_is_stamped_into_the_report(self, runner, tmp_path):
        cfg = write_config(tmp_path, F1_PASS)
        out_dir = tmp_path / "seeded"
        result = runner.invoke(
            main,
            ["check", "f1", "--config", cfg, "--out", str(out_dir), "--seed", "42"],
        )
        assert result.exit_code == 0
        assert "seed: 42" in (out_dir / "report.txt").read_text()

    def test_failing_check_exits_one_but_still_writes(self, runner, tmp_path):
        cfg = write_config(tmp_path, F1_FAIL)
        out_dir = tmp_path / "fail"
        result = runner.invoke(
            main, ["check", "f1", "--config", cfg, "--out", str(out_dir)]
        )
        assert result.exit_code == 1
        assert (out_dir / "report.txt").exists()

    def test_reruns_are_byte_identical(self, runner, tmp_path):
        cfg = write_config(tmp_path, F1_PASS)
        a, b = tmp_path / "a", tmp_path / "b"
        for out_dir in (a, b):
            result = runner.invoke(
                main,
                ["check", "f1", "--config", cfg, "--out", str(out_dir), "--seed", "1"],
            )
            assert result.exit_code == 0
        assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()
        assert (a / "report.txt").read_bytes() == (b / "report.txt").read_bytes()


class TestListing:
    def test_recipes_command_lists_the_shipped_set(self, runner):
        result = runner.invoke(main, ["recipes"])
        assert result.exit_code == 0
        for name in ("zhikov-step", "example1", "example2", "lavrentiev-dirichlet"):
            assert name in result.output

    def test_version_flag(self, runner):
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0

    def test_witness_group_exposes_all_five(self, runner):
        result = runner.invoke(main, ["witness", "--help"])
        assert result.exit_code == 0
        for sub in ("non-uhlenbeck", "non-product", "bcdfm", "bcm", "hh"):
            assert sub in result.output


class TestRemoteFailure:
    def test_unreachable_server_is_a_usage_error(self, runner, tmp_path):
        cfg = write_config(tmp_path, F1_PASS)
        result = runner.invoke(
            main,
            [
                "check",
                "f1",
                "--config",
                cfg,
                "--out",
                str(tmp_path),
                "--server",
                "http://127.0.0.1:1",
            ],
        )
        assert result.exit_code == 2
        assert "service" in result.output

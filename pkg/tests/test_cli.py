"""
Tests for the CLI module.
"""

import json
import os

import pytest
from click.testing import CliRunner

from lambdacavity import __version__
from lambdacavity.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_SOLVER,
    STEADY_COLUMNS,
    cli,
)
from lambdacavity.settings import THREADS_ENV

SMALL_SWEEP = ["--set", "delta_grid=-100, 100, 5"]


def read_lines(path):
    with open(path, "r", encoding="utf-8") as f:
        return f.read().splitlines()


class TestCLI:
    """Test cases for CLI commands."""

    def test_cli_help(self):
        """Test CLI help command."""
        runner = CliRunner()
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        assert "lambdacavity CLI" in result.output
        for command in ("steady", "sweep", "spectrum", "trap", "validate"):
            assert command in result.output

    def test_cli_version(self):
        """Test CLI version command."""
        runner = CliRunner()
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_info_command(self):
        """Test info command."""
        runner = CliRunner()
        result = runner.invoke(cli, ["info"])
        assert result.exit_code == 0
        assert "lambdacavity Information" in result.output
        assert "gamma0: 0.5" in result.output

    def test_info_command_json(self):
        """Test info command with JSON output."""
        runner = CliRunner()
        result = runner.invoke(cli, ["info", "--format", "json"])
        assert result.exit_code == 0
        data = json.loads(result.output)
        assert data["name"] == "lambdacavity"
        assert data["gamma1"] == pytest.approx(0.5)

    def test_info_command_yaml(self):
        """Test info command with YAML output."""
        runner = CliRunner()
        result = runner.invoke(cli, ["info", "--format", "yaml"])
        assert result.exit_code == 0
        assert "version: " in result.output

    def test_init_config_command(self):
        """Test init-config command."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            result = runner.invoke(cli, ["init-config", "--output", "test.conf"])
            assert result.exit_code == 0
            assert os.path.exists("test.conf")
            assert "Default configuration saved" in result.output

            result = runner.invoke(cli, ["steady", "--config", "test.conf"])
            assert result.exit_code == EXIT_OK


class TestRunCommands:
    """Test cases for the run modes."""

    def test_steady(self):
        """Test the steady mode writes one thermal row."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            result = runner.invoke(cli, ["steady", "--out", "steady.csv"])
            assert result.exit_code == EXIT_OK
            lines = read_lines("steady.csv")
            assert lines[0] == ",".join(STEADY_COLUMNS)
            values = [float(v) for v in lines[1].split(",")]
            assert abs(values[0] - 21.0 / 62.0) < 1e-10
            assert values[5] == 1

    def test_steady_degenerate_uses_initial_state(self):
        """Test degenerate kernels fall back to the configured initial state."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            result = runner.invoke(
                cli,
                [
                    "steady",
                    "--out",
                    "steady.csv",
                    "--set",
                    "omega10=0",
                    "--set",
                    "generator=approx",
                    "--set",
                    "initial_state=ket2",
                ],
            )
            assert result.exit_code == EXIT_OK
            values = [float(v) for v in read_lines("steady.csv")[1].split(",")]
            assert abs(values[2] - 20.0 / 41.0) < 1e-10
            assert values[5] == 2

    def test_sweep(self):
        """Test the sweep mode writes one row per detuning."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            result = runner.invoke(cli, ["sweep", "-o", "sweep.csv"] + SMALL_SWEEP)
            assert result.exit_code == EXIT_OK
            lines = read_lines("sweep.csv")
            assert lines[0] == "delta,d20,d21,re_coh,im_coh,p22,p11,p00"
            assert len(lines) == 6
            assert lines[1].startswith("-100,")

    def test_sweep_is_reproducible(self):
        """Test reruns give byte-identical output."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            runner.invoke(cli, ["sweep", "-o", "first.csv"] + SMALL_SWEEP)
            runner.invoke(cli, ["sweep", "-o", "second.csv"] + SMALL_SWEEP)
            with open("first.csv", "rb") as a, open("second.csv", "rb") as b:
                assert a.read() == b.read()

    def test_sweep_to_stdout(self):
        """Test output goes to stdout without --out."""
        runner = CliRunner()
        result = runner.invoke(cli, ["sweep"] + SMALL_SWEEP)
        assert result.exit_code == EXIT_OK
        assert "delta,d20,d21" in result.output

    def test_spectrum(self):
        """Test the spectrum mode writes both absorption columns."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            result = runner.invoke(
                cli,
                [
                    "spectrum",
                    "-o",
                    "spectrum.csv",
                    "--set",
                    "omega_grid=-300, 300, 61",
                ],
            )
            assert result.exit_code == EXIT_OK
            lines = read_lines("spectrum.csv")
            assert lines[0] == "omega,a_on,a_off"
            assert len(lines) == 62

    def test_trap(self):
        """Test the trap mode keeps the dark population."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            with open("trap.conf", "w", encoding="utf-8") as f:
                f.write("omega10 = 0\ninitial_state = A\ntime_grid = 0, 2, 5\n")
            result = runner.invoke(cli, ["trap", "-c", "trap.conf", "-o", "trap.csv"])
            assert result.exit_code == EXIT_OK
            lines = read_lines("trap.csv")
            assert lines[0] == "t,p22,pSS,pAA"
            for line in lines[1:]:
                assert abs(float(line.split(",")[3]) - 1.0) < 1e-10

    def test_overrides_apply_to_config_file(self):
        """Test --set wins over the value read from --config."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            with open("run.conf", "w", encoding="utf-8") as f:
                f.write("delta_grid = -400, 400, 3\n")
            args = ["sweep", "-c", "run.conf", "-o", "sweep.csv"] + SMALL_SWEEP
            result = runner.invoke(cli, args)
            assert result.exit_code == EXIT_OK
            lines = read_lines("sweep.csv")
            assert len(lines) == 6
            assert lines[1].startswith("-100,")

    def test_verbose_flag(self):
        """Test the group accepts --verbose before a command."""
        runner = CliRunner()
        result = runner.invoke(cli, ["-v", "info", "--format", "json"])
        assert result.exit_code == EXIT_OK
        assert "gamma0" in result.output


class TestExitCodes:
    """Test cases for failure handling."""

    def test_unknown_key(self):
        """Test an unknown configuration key exits with 2."""
        runner = CliRunner()
        result = runner.invoke(cli, ["steady", "--set", "speed=3"])
        assert result.exit_code == EXIT_CONFIG
        assert "speed" in result.output

    def test_invalid_value_in_file(self):
        """Test invalid values in a file exit with 2 and name the line."""
        runner = CliRunner()
        with runner.isolated_filesystem():
            with open("bad.conf", "w", encoding="utf-8") as f:
                f.write("kappa = 100\nkappa = -5\n")
            result = runner.invoke(cli, ["steady", "-c", "bad.conf"])
            assert result.exit_code == EXIT_CONFIG
            assert "line 2" in result.output

    def test_missing_config_file(self):
        """Test a missing configuration file exits with 1."""
        runner = CliRunner()
        result = runner.invoke(cli, ["steady", "-c", "missing.conf"])
        assert result.exit_code == EXIT_IO

    def test_degenerate_sweep(self):
        """Test a sweep without a unique steady state exits with 3."""
        runner = CliRunner()
        args = ["sweep", "--set", "omega10=0", "--set", "generator=approx"]
        result = runner.invoke(cli, args + SMALL_SWEEP)
        assert result.exit_code == EXIT_SOLVER

    def test_invalid_thread_setting(self):
        """Test an invalid worker cap exits with 2."""
        runner = CliRunner()
        result = runner.invoke(
            cli, ["sweep"] + SMALL_SWEEP, env={THREADS_ENV: "lots"}
        )
        assert result.exit_code == EXIT_CONFIG

    def test_cutoff_too_small(self):
        """Test a Fock cutoff that clips the thermal tail exits with 2."""
        runner = CliRunner()
        result = runner.invoke(cli, ["validate", "--set", "n_max=1"])
        assert result.exit_code == EXIT_CONFIG
        assert "n_max=1" in result.output

    def test_invalid_tail_tolerance(self):
        """Test a tail tolerance outside (0, 1) exits with 2."""
        runner = CliRunner()
        result = runner.invoke(cli, ["validate", "--set", "tail_tolerance=1.5"])
        assert result.exit_code == EXIT_CONFIG
        assert "tail_tolerance" in result.output

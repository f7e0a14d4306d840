"""
Tests for the utils module.
"""

import json
import os
import tempfile

import numpy as np
import pytest

from lambdacavity.analysis import Table
from lambdacavity.config import RunConfig, parse_config
from lambdacavity.errors import ConfigError
from lambdacavity.utils import (
    format_number,
    format_output,
    load_config,
    save_config,
    write_output,
)


class TestConfigFiles:
    """Test cases for configuration file functions."""

    def test_save_and_load_config(self):
        """Test saving and loading configuration."""
        config = parse_config("delta = 50\nmode = sweep\n")

        with tempfile.NamedTemporaryFile(mode="w", suffix=".conf", delete=False) as f:
            temp_path = f.name

        try:
            save_config(config, temp_path)
            loaded = load_config(temp_path)
            assert loaded == config
        finally:
            os.unlink(temp_path)

    def test_load_applies_overrides(self):
        """Test overrides are applied after the file."""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".conf", delete=False) as f:
            f.write("delta = 50\n")
            temp_path = f.name

        try:
            assert load_config(temp_path, ["delta=7"]).params.delta == 7.0
        finally:
            os.unlink(temp_path)

    def test_load_nonexistent_config(self):
        """Test loading non-existent config file."""
        with pytest.raises(FileNotFoundError):
            load_config("nonexistent_config.conf")

    def test_load_invalid_config(self):
        """Test loading a file with an unknown key."""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".conf", delete=False) as f:
            f.write("speed = 3\n")
            temp_path = f.name

        try:
            with pytest.raises(ConfigError):
                load_config(temp_path)
        finally:
            os.unlink(temp_path)

    def test_save_creates_directories(self):
        """Test parent directories are created."""
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "nested", "run.conf")
            save_config(RunConfig(), path)
            assert os.path.exists(path)


class TestFormatOutput:
    """Test cases for output formatting."""

    def test_format_number(self):
        """Test twelve significant digits and unsigned zero."""
        assert format_number(1.0 / 3.0) == "0.333333333333"
        assert format_number(-0.0) == "0"
        assert format_number(400.0) == "400"
        assert format_number(1.5e-20) == "1.5e-20"

    def test_csv_format(self):
        """Test CSV formatting of a table."""
        table = Table(("delta", "p22"), np.array([[-400.0, 20.0 / 62.0], [0.0, -0.0]]))
        result = format_output(table, "csv")
        assert result == "delta,p22\n-400,0.322580645161\n0,0\n"

    def test_csv_needs_table(self):
        """Test CSV output rejects plain data."""
        with pytest.raises(ValueError):
            format_output({"a": 1}, "csv")

    def test_json_format(self):
        """Test JSON formatting."""
        data = {"passed": True, "checks": []}
        result = format_output(data, "json")
        assert json.loads(result) == data
        assert result.endswith("\n")

    def test_text_format(self):
        """Test text formatting."""
        assert format_output("plain", "text") == "plain"

    def test_invalid_format(self):
        """Test invalid format type."""
        with pytest.raises(ValueError):
            format_output({}, "invalid_format")

    def test_write_output_line_endings(self):
        """Test output files use newline line endings."""
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "out", "sweep.csv")
            write_output("a,b\n1,2\n", path)
            with open(path, "rb") as f:
                assert f.read() == b"a,b\n1,2\n"

"""
Utility functions for reading configurations and writing results.
"""

import json
import os
from pathlib import Path
from typing import Any, Sequence

from .analysis import Table
from .config import RunConfig, format_config, parse_config


def load_config(config_path: str, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Load a run configuration from a ``key = value`` file.

    Args:
        config_path: Path to the configuration file
        overrides: ``key=value`` assignments applied after the file

    Returns:
        Validated run configuration

    Raises:
        FileNotFoundError: If config file doesn't exist
        ConfigError: If the file content is invalid
    """
    if not os.path.exists(config_path):
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    with open(config_path, "r", encoding="utf-8") as file:
        return parse_config(file.read(), overrides)


def save_config(config: RunConfig, config_path: str) -> None:
    """
    Save a run configuration as ``key = value`` text.

    Args:
        config: Configuration to save
        config_path: Path where to save the configuration
    """
    # Create directory if it doesn't exist
    Path(config_path).parent.mkdir(parents=True, exist_ok=True)

    with open(config_path, "w", encoding="utf-8", newline="\n") as file:
        file.write(format_config(config))


def format_number(value: float) -> str:
    """Twelve significant digits; negative zero prints as zero."""
    return format(float(value) + 0.0, ".12g")


def format_output(data: Any, format_type: str = "csv") -> str:
    """
    Format output data in the specified format.

    Args:
        data: A :class:`Table` for csv, anything JSON-serialisable for json
        format_type: Output format ("csv", "json", "text")

    Returns:
        Formatted string, newline terminated for csv

    Raises:
        ValueError: If format_type is not supported or data does not fit it
    """
    if format_type == "json":
        return json.dumps(data, indent=2) + "\n"
    elif format_type == "text":
        return str(data)
    elif format_type == "csv":
        if not isinstance(data, Table):
            raise ValueError("csv output needs a table")
        lines = [",".join(data.columns)]
        for row in data.rows():
            lines.append(",".join(format_number(value) for value in row))
        return "\n".join(lines) + "\n"
    else:
        raise ValueError(f"Unsupported format type: {format_type}")


def write_output(text: str, output_path: str) -> None:
    """Write text to a file with ``\\n`` line endings, creating parent directories."""
    Path(output_path).parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8", newline="\n") as file:
        file.write(text)

"""
Command Line Interface for lambdacavity.
"""

import json
import logging
import sys
from typing import Any, Callable, Optional, Tuple

import click
import numpy as np

from . import __version__
from .analysis import (
    Table,
    absorption_spectrum,
    build_generator,
    detuning_sweep,
    trap_series,
)
from .config import RunConfig, parse_config
from .core import effective_rates, response_function
from .dynamics import asymptotic_state, steady_state
from .errors import ConfigError, LambdaCavityError, ParameterError, SolverError
from .settings import SolverSettings
from .utils import format_output, load_config, save_config, write_output
from .validation import run_acceptance

# Set up logger for CLI
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4

STEADY_COLUMNS = (
    "p00",
    "p11",
    "p22",
    "re_coh",
    "im_coh",
    "kernel_dimension",
    "spectral_gap",
)


def _steady_table(config: RunConfig, settings: SolverSettings) -> Table:
    generator = build_generator(config.params, config.generator, config.rates)
    report = steady_state(generator, settings)
    state = report.state
    if state is None:
        logger.info("Kernel is degenerate, using the asymptotic state")
        state = asymptotic_state(generator, config.initial_density_matrix(), settings)
    gap = report.spectral_gap if report.spectral_gap is not None else float("nan")
    row = [state[i, i].real for i in range(3)]
    row += [state[0, 1].real, state[0, 1].imag, report.kernel_dimension, gap]
    return Table(STEADY_COLUMNS, np.array([row], dtype=float))


def render(config: RunConfig, settings: SolverSettings) -> Tuple[str, bool]:
    """
    Compute the output of one run.

    Args:
        config: Validated run configuration
        settings: Solver settings

    Returns:
        (output text, whether the run passed)
    """
    params = config.params
    if config.mode == "steady":
        return format_output(_steady_table(config, settings), "csv"), True
    if config.mode == "sweep":
        sweep = detuning_sweep(
            params,
            config.delta_grid.values(),
            config.generator,
            config.rates,
            settings,
        )
        return format_output(sweep, "csv"), True
    if config.mode == "spectrum":
        spectrum = absorption_spectrum(
            params,
            config.frequencies(),
            config.probe_weights(),
            config.generator,
            config.initial_density_matrix(),
            config.rates,
            settings,
        )
        return format_output(spectrum, "csv"), True
    if config.mode == "trap":
        series = trap_series(
            params,
            config.initial_density_matrix(),
            config.times(),
            config.generator,
            config.rates,
        )
        return format_output(series, "csv"), True
    report = run_acceptance(params, settings, config.fock_config())
    return format_output(report.to_dict(), "json"), report.passed


def run(
    config: RunConfig,
    settings: Optional[SolverSettings] = None,
    output_path: Optional[str] = None,
) -> int:
    """
    Execute a run and write its output.

    Args:
        config: Validated run configuration
        settings: Solver settings, read from the environment when omitted
        output_path: Overrides ``config.output_path``; stdout when both unset

    Returns:
        Process exit status
    """
    try:
        settings = settings or SolverSettings.from_env()
    except ConfigError as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_CONFIG

    try:
        text, passed = render(config, settings)
    except ParameterError as e:
        logger.error(f"Invalid parameters: {e}")
        click.echo(f"Error: {e}", err=True)
        return EXIT_CONFIG
    except (SolverError, LambdaCavityError) as e:
        logger.error(f"Solver failed: {e}")
        click.echo(f"Error: {e}", err=True)
        return EXIT_SOLVER

    destination = output_path or config.output_path
    if destination:
        try:
            write_output(text, destination)
        except OSError as e:
            click.echo(f"Error writing {destination}: {e}", err=True)
            return EXIT_IO
        logger.info(f"Wrote {config.mode} output to {destination}")
    else:
        click.echo(text, nl=False)

    if not passed:
        click.echo("Validation failed", err=True)
        return EXIT_VALIDATION
    return EXIT_OK


def _load(
    config_path: Optional[str], overrides: Tuple[str, ...], mode: str
) -> RunConfig:
    try:
        if config_path:
            config = load_config(config_path, overrides)
        else:
            config = parse_config("", overrides)
    except OSError as e:
        click.echo(f"Error loading config: {e}", err=True)
        sys.exit(EXIT_IO)
    except ConfigError as e:
        click.echo(f"Error loading config: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    return config.model_copy(update={"mode": mode})


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every run mode."""
    func = click.option(
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a configuration key (repeatable)",
    )(func)
    func = click.option(
        "--out", "-o", "out_path", type=str, help="Output file path"
    )(func)
    func = click.option(
        "--config", "-c", "config_path", type=str, help="Path to configuration file"
    )(func)
    return func


@click.group()
@click.version_option(version=__version__)
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose output")
def cli(verbose: bool) -> None:
    """
    lambdacavity CLI - Λ atom in a damped thermal cavity.

    Use --help with any command for more information.
    """
    # Set up logging
    if verbose:
        logging.basicConfig(level=logging.DEBUG)
    else:
        logging.basicConfig(level=logging.INFO)


def _mode_command(mode: str, summary: str) -> None:
    @run_options
    def command(
        config_path: Optional[str], out_path: Optional[str], overrides: Tuple[str, ...]
    ) -> None:
        config = _load(config_path, overrides, mode)
        sys.exit(run(config, output_path=out_path))

    command.__doc__ = summary
    cli.command(name=mode)(command)


_mode_command("steady", "Steady state of the atomic generator.")
_mode_command("sweep", "Steady-state observables over the detuning grid.")
_mode_command("spectrum", "Probe absorption with and without interference.")
_mode_command("trap", "Bright, dark and excited populations over time.")
_mode_command("validate", "Run the acceptance checks and write a JSON report.")


@cli.command()
@click.option("--config", "-c", "config_path", type=str, help="Configuration file")
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["json", "yaml", "table"]),
    default="table",
    help="Output format",
)
def info(config_path: Optional[str], output_format: str) -> None:
    """
    Display derived rates and cavity responses.
    """
    params = _load(config_path, (), "steady").params
    gamma0, gamma1 = effective_rates(params)
    f_minus = response_function(params, -1)
    f_plus = response_function(params, +1)
    info_data = {
        "name": "lambdacavity",
        "version": __version__,
        "gamma0": gamma0,
        "gamma1": gamma1,
        "F_minus": str(f_minus),
        "F_plus": str(f_plus),
    }

    if output_format == "json":
        click.echo(json.dumps(info_data, indent=2))
    elif output_format == "yaml":
        for key, value in info_data.items():
            click.echo(f"{key}: {value}")
    else:  # table format
        click.echo("lambdacavity Information")
        click.echo("=" * 24)
        click.echo(f"Version: {__version__}")
        click.echo(f"gamma0: {gamma0:.6g}")
        click.echo(f"gamma1: {gamma1:.6g}")
        click.echo(f"F(-omega10): {f_minus:.6g}")
        click.echo(f"F(+omega10): {f_plus:.6g}")


@cli.command()
@click.option(
    "--output",
    "-o",
    type=str,
    required=True,
    help="Path to save the configuration file",
)
def init_config(output: str) -> None:
    """
    Create a default configuration file.
    """
    try:
        save_config(RunConfig(), output)
        click.echo(f"Default configuration saved to {output}")
    except OSError as e:
        click.echo(f"Error saving configuration: {e}", err=True)
        sys.exit(EXIT_IO)


def main() -> None:
    """Entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()

"""
Exception hierarchy for lambdacavity.
"""

from typing import Optional


class LambdaCavityError(Exception):
    """Base class for every error raised by lambdacavity."""


class ParameterError(LambdaCavityError, ValueError):
    """A physical parameter or input state is invalid."""


class DimensionError(LambdaCavityError, ValueError):
    """Operator, state or superoperator dimensions do not match."""


class ConfigError(LambdaCavityError, ValueError):
    """
    A run configuration could not be parsed or validated.

    Args:
        message: What is wrong with the value
        key: Offending configuration key, if known
        line: 1-based line number in the configuration text, if known
    """

    def __init__(
        self, message: str, key: Optional[str] = None, line: Optional[int] = None
    ) -> None:
        self.key = key
        self.line = line
        self.reason = message
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(f"{prefix}{message}")


class SolverError(LambdaCavityError, RuntimeError):
    """A numerical procedure failed."""


class NonPhysicalGeneratorError(SolverError):
    """The generator is not a valid trace-preserving dissipative map."""


class DegenerateKernelError(SolverError):
    """A unique steady state was required but the kernel is degenerate."""


class DefectiveKernelError(SolverError):
    """The zero eigenvalue of the generator is not semisimple."""


class SingularResolventError(SolverError):
    """The correlation source has a component in the generator kernel."""


class NoSignChangeError(SolverError):
    """No sign change was found inside the requested detuning range."""


class FitError(SolverError):
    """A line-shape fit failed or the lines are not resolvable."""

"""
Run configuration: flat ``key = value`` text validated into pydantic models.
"""

import logging
from typing import Any, Dict, List, Literal, NoReturn, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .analysis import GeneratorName, sa_basis
from .core import ModelParams, RateConvention, approx_rates
from .dynamics import as_density_matrix, basis_state, projector
from .errors import ConfigError, LambdaCavityError
from .oracle import FockConfig

logger = logging.getLogger(__name__)

Mode = Literal["steady", "sweep", "spectrum", "trap", "validate"]

PARAM_KEYS = ("g0", "g1", "kappa", "omega10", "delta", "nbar", "interference")
GRID_KEYS = ("delta_grid", "omega_grid", "time_grid")
RUN_KEYS = (
    "mode",
    "generator",
    "rates",
    "initial_state",
    "n_max",
    "tail_tolerance",
    "probe_mu0",
    "probe_mu1",
    "output_path",
)
KNOWN_KEYS = PARAM_KEYS + GRID_KEYS + RUN_KEYS
STATE_LABELS = ("ket0", "ket1", "ket2", "S", "A")


class Grid(BaseModel):
    """Uniform grid of ``count`` points from ``start`` to ``stop``."""

    model_config = ConfigDict(frozen=True)

    start: float = Field(allow_inf_nan=False)
    stop: float = Field(allow_inf_nan=False)
    count: int = Field(ge=2)

    @model_validator(mode="after")
    def _ordered(self) -> "Grid":
        if not self.start < self.stop:
            raise ValueError("start must be below stop")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def as_text(self) -> str:
        return f"{self.start!r}, {self.stop!r}, {self.count}"


class RunConfig(BaseModel):
    """
    Everything one CLI invocation needs.

    ``omega_grid`` and ``time_grid`` default to ranges derived from the
    model parameters, see :meth:`frequencies` and :meth:`times`.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: ModelParams = ModelParams()
    mode: Mode = "steady"
    generator: GeneratorName = "reduced"
    rates: RateConvention = "bad_cavity"
    delta_grid: Grid = Grid(start=-400.0, stop=400.0, count=401)
    omega_grid: Optional[Grid] = None
    time_grid: Optional[Grid] = None
    initial_state: str = "ket0"
    n_max: Optional[int] = Field(None, ge=1)
    tail_tolerance: Optional[float] = Field(None, gt=0, lt=1)
    probe_mu0: complex = complex(1.0)
    probe_mu1: complex = complex(1.0)
    output_path: Optional[str] = None

    def frequencies(self) -> np.ndarray:
        """Probe grid, +-1.5 max(omega10, 2 kappa) with 1201 points by default."""
        if self.omega_grid is not None:
            return self.omega_grid.values()
        span = 1.5 * max(self.params.omega10, 2.0 * self.params.kappa)
        return np.linspace(-span, span, 1201)

    def times(self) -> np.ndarray:
        """Time grid, ten total decay times with 201 points by default."""
        if self.time_grid is not None:
            return self.time_grid.values()
        gamma0, gamma1 = approx_rates(self.params, self.rates)
        total = gamma0 + gamma1
        stop = 10.0 / total if total > 0 else 1.0
        return np.linspace(0.0, stop, 201)

    def probe_weights(self) -> Tuple[complex, complex]:
        return self.probe_mu0, self.probe_mu1

    def fock_config(self) -> Optional[FockConfig]:
        """Fock truncation for the full model, None when neither key is set."""
        if self.n_max is None and self.tail_tolerance is None:
            return None
        if self.tail_tolerance is None:
            return FockConfig(n_max=self.n_max)
        return FockConfig(n_max=self.n_max, tail_tolerance=self.tail_tolerance)

    def initial_density_matrix(self) -> np.ndarray:
        """Resolve ``initial_state`` to a validated 3x3 density matrix."""
        return resolve_initial_state(self.initial_state, self.params, self.rates)


def resolve_initial_state(
    text: str, params: ModelParams, rates: RateConvention = "bad_cavity"
) -> np.ndarray:
    """
    Turn an initial-state label or matrix literal into a density matrix.

    Labels are ``ket0``, ``ket1``, ``ket2``, ``S`` and ``A``. A matrix is
    written row by row, rows separated by ``;`` and entries by ``,``; it is
    normalised by its trace.

    Raises:
        ValueError: If the text is neither a label nor a valid state
    """
    label = text.strip()
    if label in ("ket0", "ket1", "ket2"):
        return basis_state(int(label[-1]))
    if label in ("S", "A"):
        basis = sa_basis(params, rates)
        ket = basis.symmetric if label == "S" else basis.antisymmetric
        return projector(ket)

    rows = [row for row in label.split(";") if row.strip()]
    try:
        entries = [
            [complex(item.replace(" ", "")) for item in row.split(",")]
            for row in rows
        ]
        matrix = np.array(entries, dtype=complex)
    except ValueError as exc:
        raise ValueError(
            f"expected one of {', '.join(STATE_LABELS)} or a 3x3 matrix"
        ) from exc
    if matrix.shape != (3, 3):
        raise ValueError(f"matrix must be 3x3, got {matrix.shape}")
    trace = np.trace(matrix)
    if abs(trace) == 0:
        raise ValueError("matrix has zero trace")
    try:
        return as_density_matrix(matrix / trace)
    except LambdaCavityError as exc:
        raise ValueError(str(exc)) from exc


def _convert(key: str, raw: str) -> Any:
    if key in GRID_KEYS:
        parts = [part.strip() for part in raw.split(",")]
        if len(parts) != 3:
            raise ValueError("expected start, stop, count")
        return {
            "start": float(parts[0]),
            "stop": float(parts[1]),
            "count": int(parts[2]),
        }
    if key in ("g0", "g1", "probe_mu0", "probe_mu1"):
        return complex(raw.replace(" ", ""))
    if key == "n_max":
        return int(raw)
    if key in ("kappa", "omega10", "delta", "nbar", "interference", "tail_tolerance"):
        return float(raw)
    return raw


def _read_assignments(
    text: str, overrides: Sequence[str]
) -> Dict[str, Tuple[str, Optional[int]]]:
    assignments: Dict[str, Tuple[str, Optional[int]]] = {}
    numbered: List[Tuple[str, Optional[int]]] = [
        (raw, number) for number, raw in enumerate(text.splitlines(), start=1)
    ]
    numbered += [(raw, None) for raw in overrides]
    for raw, number in numbered:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            key = None if number is not None else "--set"
            raise ConfigError(f"expected key = value, got {line!r}", key, number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", key, number)
        assignments[key] = (value, number)
    return assignments


def _raise_validation(
    exc: ValidationError, assignments: Dict[str, Tuple[str, Optional[int]]]
) -> NoReturn:
    error = exc.errors()[0]
    location = [str(part) for part in error.get("loc", ())]
    key = next((part for part in location if part in KNOWN_KEYS), None)
    line = assignments[key][1] if key in assignments else None
    raise ConfigError(error.get("msg", str(exc)), key, line) from exc


def parse_config(text: str, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Parse configuration text into a :class:`RunConfig`.

    Args:
        text: ``key = value`` lines; ``#`` starts a comment
        overrides: Extra ``key=value`` assignments applied after the text

    Returns:
        Validated run configuration; empty text gives the defaults

    Raises:
        ConfigError: Naming the offending key and line
    """
    assignments = _read_assignments(text, overrides)
    converted: Dict[str, Any] = {}
    for key, (raw, number) in assignments.items():
        try:
            converted[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {raw!r}: {exc}", key, number) from exc

    physical = {key: converted.pop(key) for key in PARAM_KEYS if key in converted}
    try:
        params = ModelParams(**physical)
        config = RunConfig(params=params, **converted)
    except ValidationError as exc:
        _raise_validation(exc, assignments)

    try:
        config.initial_density_matrix()
    except (ValueError, LambdaCavityError) as exc:
        line = assignments.get("initial_state", ("", None))[1]
        raise ConfigError(str(exc), "initial_state", line) from exc
    logger.debug(f"Parsed configuration with {len(assignments)} assignments")
    return config


def format_config(config: RunConfig) -> str:
    """Render a configuration as ``key = value`` text that parses back."""
    params = config.params
    lines = [f"{key} = {getattr(params, key)!r}" for key in PARAM_KEYS]
    lines += [
        f"mode = {config.mode}",
        f"generator = {config.generator}",
        f"rates = {config.rates}",
        f"delta_grid = {config.delta_grid.as_text()}",
    ]
    for key in ("omega_grid", "time_grid"):
        grid = getattr(config, key)
        if grid is not None:
            lines.append(f"{key} = {grid.as_text()}")
    lines += [
        f"initial_state = {config.initial_state}",
        f"probe_mu0 = {config.probe_mu0!r}",
        f"probe_mu1 = {config.probe_mu1!r}",
    ]
    if config.n_max is not None:
        lines.append(f"n_max = {config.n_max}")
    if config.tail_tolerance is not None:
        lines.append(f"tail_tolerance = {config.tail_tolerance!r}")
    if config.output_path is not None:
        lines.append(f"output_path = {config.output_path}")
    return "\n".join(lines) + "\n"

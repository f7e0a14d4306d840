"""
Physics analyses built on the reduced generators: dark/bright basis, detuning
sweeps, inversion boundaries, probe absorption spectra and linewidths.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Sequence, Tuple, TypeVar

import numpy as np
from scipy.optimize import bisect, curve_fit
from scipy.signal import find_peaks

from .core import (
    ModelParams,
    RateConvention,
    Superoperator,
    approx_rates,
    build_approx_liouvillian,
    build_reduced_liouvillian,
    coupling_phase,
    response_function,
    transition,
)
from .dynamics import (
    as_density_matrix,
    asymptotic_state,
    evolve,
    resolvent_spectrum,
    steady_state,
)
from .errors import DegenerateKernelError, FitError, NoSignChangeError, ParameterError
from .settings import SolverSettings

logger = logging.getLogger(__name__)

GeneratorName = Literal["reduced", "approx"]
T = TypeVar("T")
R = TypeVar("R")


def build_generator(
    params: ModelParams,
    generator: GeneratorName = "reduced",
    rates: RateConvention = "bad_cavity",
) -> Superoperator:
    """Build the reduced (``"reduced"``) or bad-cavity (``"approx"``) generator."""
    if generator == "reduced":
        return build_reduced_liouvillian(params)
    if generator == "approx":
        return build_approx_liouvillian(params, rates)
    raise ParameterError(f"unknown generator: {generator!r}")


@dataclass(frozen=True, eq=False)
class SABasis:
    """
    Bright (S), dark (A) and excited (2) states.

    ``unitary`` holds the rows <S|, <A|, <2| in the (|0>, |1>, |2>) basis, so
    that a state transforms as U rho U^dag.
    """

    unitary: np.ndarray

    @property
    def symmetric(self) -> np.ndarray:
        return self.unitary[0].conj()

    @property
    def antisymmetric(self) -> np.ndarray:
        return self.unitary[1].conj()


def sa_basis(params: ModelParams, rates: RateConvention = "bad_cavity") -> SABasis:
    """
    Bright/dark basis of the two decay channels.

    |S> = (sqrt(gamma0)|0> + e^{-i theta} sqrt(gamma1)|1>) / norm and
    |A> = (sqrt(gamma0)|1> - e^{i theta} sqrt(gamma1)|0>) / norm, with theta
    the phase of g0 g1^*.

    Raises:
        ParameterError: If both rates vanish
    """
    gamma0, gamma1 = approx_rates(params, rates)
    total = gamma0 + gamma1
    if total <= 0:
        raise ParameterError("bright/dark basis needs a non-zero decay rate")
    phase = coupling_phase(params)
    s0, s1 = np.sqrt(gamma0 / total), np.sqrt(gamma1 / total)
    bright = np.array([s0, np.conj(phase) * s1, 0.0], dtype=complex)
    dark = np.array([-phase * s1, s0, 0.0], dtype=complex)
    excited = np.array([0.0, 0.0, 1.0], dtype=complex)
    return SABasis(np.vstack([bright.conj(), dark.conj(), excited]))


def sa_transform(
    params: ModelParams, rho: np.ndarray, rates: RateConvention = "bad_cavity"
) -> np.ndarray:
    """Express a state in the (S, A, 2) basis."""
    unitary = sa_basis(params, rates).unitary
    return unitary @ np.asarray(rho, dtype=complex) @ unitary.conj().T


def sa_transform_generator(
    params: ModelParams,
    generator: Superoperator,
    rates: RateConvention = "bad_cavity",
) -> Superoperator:
    """Express a 3-level generator in the (S, A, 2) basis."""
    unitary = sa_basis(params, rates).unitary
    change = np.kron(unitary.conj(), unitary)
    return Superoperator(
        generator.dim, change @ generator.dense() @ change.conj().T
    )


def thermal_fixed_point(params: ModelParams) -> np.ndarray:
    """
    Stationary atomic state diag(N+1, N+1, N) / (3N+2).

    The atom-cavity coupling conserves a^dag a + A22 and the thermal cavity
    balances every such sector, so this state is stationary for the full
    and both reduced models whenever the ground levels are split.
    """
    n = params.nbar
    return np.diag([n + 1.0, n + 1.0, n]).astype(complex) / (3.0 * n + 2.0)


def trapping_populations(
    params: ModelParams, rho0: np.ndarray, rates: RateConvention = "bad_cavity"
) -> Tuple[float, float, float]:
    """
    Long-time (p22, pSS, pAA) for degenerate ground levels.

    The dark population is frozen at its initial value; the rest reaches the
    thermal ratio N : N+1 between |2> and |S>.
    """
    rotated = sa_transform(params, rho0, rates)
    dark = float(rotated[1, 1].real)
    active = 1.0 - dark
    n = params.nbar
    return (
        active * n / (2.0 * n + 1.0),
        active * (n + 1.0) / (2.0 * n + 1.0),
        dark,
    )


@dataclass(frozen=True, eq=False)
class Table:
    """Column-labelled numeric table."""

    columns: Tuple[str, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise ParameterError(
                f"table data of shape {self.data.shape} does not match "
                f"{len(self.columns)} columns"
            )

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def rows(self) -> List[Tuple[float, ...]]:
        return [tuple(float(value) for value in row) for row in self.data]


SWEEP_COLUMNS = ("delta", "d20", "d21", "re_coh", "im_coh", "p22", "p11", "p00")
SPECTRUM_COLUMNS = ("omega", "a_on", "a_off")
TRAP_COLUMNS = ("t", "p22", "pSS", "pAA")


class SweepResult(Table):
    """Steady-state observables per detuning."""


class SpectrumResult(Table):
    """Probe absorption with and without interference per frequency."""


class TrapSeries(Table):
    """Populations in the (S, A, 2) basis over time."""


def steady_observables(rho: np.ndarray) -> Tuple[float, ...]:
    """(d20, d21, Re rho01, Im rho01, p22, p11, p00) of an atomic state."""
    p00, p11, p22 = (float(rho[i, i].real) for i in range(3))
    coherence = complex(rho[0, 1])
    return (p22 - p00, p22 - p11, coherence.real, coherence.imag, p22, p11, p00)


def _map_ordered(func: Callable[[T], R], items: Sequence[T], threads: int) -> List[R]:
    if threads == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(func, items))


def detuning_sweep(
    params: ModelParams,
    deltas: Sequence[float],
    generator: GeneratorName = "reduced",
    rates: RateConvention = "bad_cavity",
    settings: Optional[SolverSettings] = None,
) -> SweepResult:
    """
    Steady-state observables over a grid of cavity detunings.

    Points are solved concurrently and returned in grid order.

    Raises:
        DegenerateKernelError: If any grid point has no unique steady state
    """
    settings = settings or SolverSettings()

    def solve(delta: float) -> Tuple[float, ...]:
        report = steady_state(
            build_generator(params.replace(delta=float(delta)), generator, rates),
            settings,
        )
        if report.state is None:
            raise DegenerateKernelError(
                f"kernel of dimension {report.kernel_dimension} at delta={delta}"
            )
        return (float(delta),) + steady_observables(report.state)

    rows = _map_ordered(solve, list(deltas), settings.threads)
    logger.info(f"Swept {len(rows)} detunings with the {generator} generator")
    return SweepResult(SWEEP_COLUMNS, np.array(rows, dtype=float).reshape(-1, 8))


def _bracketed_roots(
    func: Callable[[float], float],
    grid: np.ndarray,
    values: np.ndarray,
    xtol: float,
) -> List[float]:
    roots: List[float] = []
    for index in range(len(grid) - 1):
        left, right = values[index], values[index + 1]
        if left == 0:
            roots.append(float(grid[index]))
        elif left * right < 0:
            roots.append(float(bisect(func, grid[index], grid[index + 1], xtol=xtol)))
    if len(grid) and values[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


def inversion_boundaries(
    params: ModelParams,
    which: Literal["d20", "d21"],
    deltas: Sequence[float],
    xtol: float = 0.05,
    generator: GeneratorName = "reduced",
    rates: RateConvention = "bad_cavity",
    settings: Optional[SolverSettings] = None,
) -> List[float]:
    """
    Detunings where a population difference changes sign.

    Sign changes are bracketed on the grid and refined by bisection.

    Raises:
        NoSignChangeError: If the difference keeps its sign over the grid
    """
    if which not in ("d20", "d21"):
        raise ParameterError(f"unknown population difference: {which!r}")
    column = 1 if which == "d20" else 2
    grid = np.asarray(deltas, dtype=float)
    sweep = detuning_sweep(params, grid, generator, rates, settings)
    values = sweep.data[:, column]

    def difference(delta: float) -> float:
        return float(
            detuning_sweep(params, [delta], generator, rates, settings).data[0, column]
        )

    roots = _bracketed_roots(difference, grid, values, xtol)
    if not roots:
        raise NoSignChangeError(
            f"{which} stays in [{values.min():.6g}, {values.max():.6g}] "
            f"over delta in [{grid[0]}, {grid[-1]}]"
        )
    logger.info(f"{which} changes sign at {roots}")
    return roots


def probe_operator(weights: Tuple[complex, complex] = (1.0, 1.0)) -> np.ndarray:
    """Raising part of the probe coupling, mu0 A20 + mu1 A21."""
    mu0, mu1 = weights
    return mu0 * transition(2, 0) + mu1 * transition(2, 1)


def absorption_profile(
    generator: Superoperator,
    rho_ss: np.ndarray,
    probe_up: np.ndarray,
    omegas: Sequence[float],
    settings: Optional[SolverSettings] = None,
) -> np.ndarray:
    """
    Weak-probe absorption Re[corr(P-, P+) - corr_reversed(P+, P-)] per omega.

    Both correlations share one resolvent solve on the commutator [P+, rho].
    Negative values mean gain.
    """
    probe_up = np.asarray(probe_up, dtype=complex)
    source = probe_up @ rho_ss - rho_ss @ probe_up
    values = resolvent_spectrum(
        generator, probe_up.conj().T, source, omegas, settings
    )
    return values.real


def _stationary_state(
    generator: Superoperator,
    initial_state: Optional[np.ndarray],
    settings: SolverSettings,
) -> np.ndarray:
    report = steady_state(generator, settings)
    if report.state is not None:
        return report.state
    if initial_state is None:
        raise DegenerateKernelError(
            f"kernel of dimension {report.kernel_dimension}; "
            "an initial state is needed"
        )
    return asymptotic_state(generator, initial_state, settings)


def absorption_spectrum(
    params: ModelParams,
    omegas: Sequence[float],
    probe_weights: Tuple[complex, complex] = (1.0, 1.0),
    generator: GeneratorName = "reduced",
    initial_state: Optional[np.ndarray] = None,
    rates: RateConvention = "bad_cavity",
    settings: Optional[SolverSettings] = None,
) -> SpectrumResult:
    """
    Probe absorption with interference (``a_on``) and without (``a_off``).

    ``a_on`` uses ``params.interference``; ``a_off`` sets it to zero. Each
    spectrum is taken in the stationary state of its own generator.

    Args:
        params: Model parameters
        omegas: Probe frequencies relative to the excited level
        probe_weights: Probe dipole weights (mu0, mu1)
        generator: ``"reduced"`` or ``"approx"``
        initial_state: Selects the stationary state when the kernel is
            degenerate
        rates: Rate convention of the bad-cavity generator
        settings: Solver tolerances

    Returns:
        Spectrum table with columns omega, a_on, a_off
    """
    settings = settings or SolverSettings()
    if initial_state is not None:
        initial_state = as_density_matrix(initial_state, dim=3)
    omegas = np.asarray(omegas, dtype=float)
    probe_up = probe_operator(probe_weights)
    columns = [omegas]
    for interference in (params.interference, 0.0):
        variant = params.replace(interference=interference)
        matrix = build_generator(variant, generator, rates)
        rho_ss = _stationary_state(matrix, initial_state, settings)
        columns.append(absorption_profile(matrix, rho_ss, probe_up, omegas, settings))
    logger.info(
        f"Computed absorption on {omegas.size} frequencies at delta={params.delta}"
    )
    return SpectrumResult(SPECTRUM_COLUMNS, np.column_stack(columns))


@dataclass(frozen=True)
class Sideband:
    center: float
    hwhm: float


def uncoupled_sidebands(params: ModelParams) -> Tuple[Sideband, Sideband]:
    """
    Exact probe lines of the reduced model without interference.

    Returns:
        (high, low) sidebands, each with its shifted centre and half width
    """
    f0 = response_function(params, -1) * abs(params.g0) ** 2
    f1 = response_function(params, +1) * abs(params.g1) ** 2
    emit, absorb = params.nbar + 1.0, params.nbar
    half = params.omega10 / 2.0
    high = Sideband(
        center=half + emit * (f0 + f1).imag + absorb * f0.imag,
        hwhm=emit * (f0 + f1).real + absorb * f0.real,
    )
    low = Sideband(
        center=-half + emit * (f0 + f1).imag + absorb * f1.imag,
        hwhm=emit * (f0 + f1).real + absorb * f1.real,
    )
    return high, low


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    hwhm: float
    height: float
    offset: float


def lorentzian(
    omega: np.ndarray, center: float, hwhm: float, height: float, offset: float
) -> np.ndarray:
    """Lorentzian of peak ``height`` above ``offset``."""
    return offset + height * hwhm**2 / (hwhm**2 + (omega - center) ** 2)


def _double_lorentzian(
    omega: np.ndarray,
    c1: float,
    w1: float,
    h1: float,
    c2: float,
    w2: float,
    h2: float,
    offset: float,
) -> np.ndarray:
    return lorentzian(omega, c1, w1, h1, offset) + lorentzian(omega, c2, w2, h2, 0.0)


def fit_lorentzian(
    omegas: Sequence[float], values: Sequence[float], center: float, hwhm: float
) -> LorentzianFit:
    """
    Fit a single Lorentzian plus constant within center +- 3 hwhm.

    Raises:
        FitError: If the window is too small or the fit does not converge
    """
    omegas = np.asarray(omegas, dtype=float)
    values = np.asarray(values, dtype=float)
    window = np.abs(omegas - center) <= 3.0 * hwhm
    if np.count_nonzero(window) < 5:
        raise FitError(f"too few points within 3 widths of {center:.6g}")
    x, y = omegas[window], values[window]
    scale = float(np.max(np.abs(y))) or 1.0
    guess = [center, hwhm, (y.max() - y.min()) / scale, y.min() / scale]
    try:
        popt, _ = curve_fit(lorentzian, x, y / scale, p0=guess, maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"Lorentzian fit near {center:.6g} failed: {exc}") from exc
    return LorentzianFit(
        center=float(popt[0]),
        hwhm=float(abs(popt[1])),
        height=float(popt[2] * scale),
        offset=float(popt[3] * scale),
    )


def _half_width_guess(omegas: np.ndarray, values: np.ndarray, peak: int) -> float:
    baseline = float(values.min())
    half = baseline + 0.5 * (values[peak] - baseline)
    distances = []
    right = peak
    while right < len(values) - 1 and values[right] > half:
        right += 1
    if values[right] <= half:
        distances.append(omegas[right] - omegas[peak])
    left = peak
    while left > 0 and values[left] > half:
        left -= 1
    if values[left] <= half:
        distances.append(omegas[peak] - omegas[left])
    if not distances:
        raise FitError(f"no half-maximum crossing around {omegas[peak]:.6g}")
    return float(min(distances))


def _seed_fit(
    omegas: np.ndarray, values: np.ndarray, peak: int, width: float
) -> LorentzianFit:
    raw = LorentzianFit(float(omegas[peak]), width, float(values[peak]), 0.0)
    try:
        fit = fit_lorentzian(omegas, values, raw.center, width)
    except FitError as exc:
        logger.debug(f"Single-line fit failed, seeding from the raw peak: {exc}")
        return raw
    # a neighbouring line can drag the single fit away
    if abs(fit.center - raw.center) > width or not 0.5 <= fit.hwhm / width <= 2.0:
        return raw
    return fit


def sideband_linewidths(
    spectrum: SpectrumResult, column: Literal["a_on", "a_off"] = "a_on"
) -> Tuple[float, float]:
    """
    Half widths of the two probe sidebands.

    Each of the two strongest peaks is first fitted on its own with
    :func:`fit_lorentzian`. Those fits seed a joint fit of two Lorentzians
    and a constant over the union of their +-3 width windows.

    Returns:
        (width_high, width_low) for the higher- and lower-frequency line

    Raises:
        FitError: If fewer than two peaks exist, the fit fails, or the peaks
            are closer than three times their summed widths
    """
    omegas = spectrum.column("omega")
    values = spectrum.column(column)
    peaks, props = find_peaks(values, prominence=0.0)
    if len(peaks) < 2:
        raise FitError(f"{column} shows {len(peaks)} peak(s), two are needed")
    strongest = peaks[np.argsort(props["prominences"])[-2:]]
    low_peak, high_peak = sorted(strongest, key=lambda index: omegas[index])
    seeds = [
        _seed_fit(omegas, values, peak, _half_width_guess(omegas, values, peak))
        for peak in (high_peak, low_peak)
    ]

    window = np.zeros(omegas.shape, dtype=bool)
    for seed in seeds:
        window |= np.abs(omegas - seed.center) <= 3.0 * seed.hwhm
    scale = float(np.max(np.abs(values[window])))
    guess = [seeds[0].center, seeds[0].hwhm, seeds[0].height / scale]
    guess += [seeds[1].center, seeds[1].hwhm, seeds[1].height / scale, 0.0]
    try:
        popt, _ = curve_fit(
            _double_lorentzian,
            omegas[window],
            values[window] / scale,
            p0=guess,
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"sideband fit failed: {exc}") from exc

    c1, w1, _, c2, w2, _, _ = popt
    w1, w2 = abs(float(w1)), abs(float(w2))
    if abs(c1 - c2) < 3.0 * (w1 + w2):
        raise FitError(
            f"sidebands at {c1:.6g} and {c2:.6g} overlap (widths {w1:.3g}, {w2:.3g})"
        )
    if c1 >= c2:
        return w1, w2
    return w2, w1


def trap_series(
    params: ModelParams,
    rho0: np.ndarray,
    times: Sequence[float],
    generator: GeneratorName = "approx",
    rates: RateConvention = "bad_cavity",
) -> TrapSeries:
    """Populations of |2>, |S> and |A> along a trajectory."""
    rho0 = as_density_matrix(rho0, dim=3)
    matrix = build_generator(params, generator, rates)
    rows = []
    for t in times:
        rotated = sa_transform(params, evolve(matrix, rho0, float(t)), rates)
        populations = np.diag(rotated).real
        rows.append((float(t), populations[2], populations[0], populations[1]))
    return TrapSeries(TRAP_COLUMNS, np.array(rows, dtype=float).reshape(-1, 4))


"""
Acceptance checks for the reduced and full models.

Gating checks decide the exit status of ``lambdacavity validate``. Reference
comparisons record how the computed physics relates to tabulated
reference values. They are reported but never gate.
"""

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg as la

from .analysis import (
    absorption_spectrum,
    detuning_sweep,
    inversion_boundaries,
    sa_basis,
    sa_transform,
    sideband_linewidths,
    thermal_fixed_point,
    trapping_populations,
    uncoupled_sidebands,
)
from .core import (
    ModelParams,
    approx_rates,
    build_approx_liouvillian,
    build_reduced_liouvillian,
    check_generator,
)
from .dynamics import asymptotic_state, basis_state, evolve, projector, steady_state
from .errors import LambdaCavityError, NoSignChangeError
from .oracle import (
    FockConfig,
    oracle_averaged_deviation,
    oracle_steady_deviation,
    resolve_cutoff,
)
from .settings import SolverSettings

logger = logging.getLogger(__name__)

Outcome = Tuple[bool, str]

REFERENCE_BOUNDARIES = {"d20": (-139.2, 82.3), "d21": (-82.3, 139.2)}
DELTA_GRID = np.linspace(-400.0, 400.0, 401)
OMEGA_GRID = np.linspace(-300.0, 300.0, 1201)
# near the bad-cavity limit; the full model stays small at this nbar
ORACLE_PARAMS = ModelParams(
    g0=1.0, g1=1.0, kappa=100.0, omega10=2.0, delta=0.0, nbar=0.5
)
# relabels |0> <-> |1>
_SWAP = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def _index(row: int, col: int, dim: int = 3) -> int:
    return row + col * dim


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    gating: bool = True

    def to_dict(self) -> Dict[str, Any]:
        key = "passed" if self.gating else "reproduced"
        return {"name": self.name, key: self.passed, "detail": self.detail}


@dataclass
class ValidationReport:
    params: ModelParams
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks if check.gating)

    def failures(self) -> List[str]:
        return [c.name for c in self.checks if c.gating and not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        params = {
            key: str(value) if isinstance(value, complex) else value
            for key, value in self.params.model_dump().items()
        }
        return {
            "passed": self.passed,
            "parameters": params,
            "checks": [c.to_dict() for c in self.checks if c.gating],
            "reference_comparisons": [
                c.to_dict() for c in self.checks if not c.gating
            ],
        }


def check_trapping(params: ModelParams, settings: SolverSettings) -> Outcome:
    """Degenerate ground levels: two stationary states, dark population kept."""
    degenerate = params.replace(omega10=0.0)
    generator = build_approx_liouvillian(degenerate)
    kernel = steady_state(generator, settings).kernel_dimension
    worst = 0.0
    for level in (2, 0):
        rho0 = basis_state(level)
        limit = sa_transform(degenerate, asymptotic_state(generator, rho0, settings))
        found = (limit[2, 2].real, limit[0, 0].real, limit[1, 1].real)
        expected = trapping_populations(degenerate, rho0)
        worst = max(worst, float(np.max(np.abs(np.subtract(found, expected)))))
    return kernel == 2 and worst <= 1e-8, f"kernel={kernel}, max error {worst:.3g}"


def check_trapped_state(params: ModelParams, settings: SolverSettings) -> Outcome:
    """The dark state is stationary for degenerate ground levels."""
    degenerate = params.replace(omega10=0.0)
    generator = build_approx_liouvillian(degenerate)
    dark = np.diag([0.0, 1.0, 0.0]).astype(complex)
    rho_dark = projector(sa_basis(degenerate).antisymmetric)
    positive = [rate for rate in approx_rates(degenerate) if rate > 0]
    t = 1e3 / min(positive, default=1.0)
    later = sa_transform(degenerate, evolve(generator, rho_dark, t))
    error = float(np.max(np.abs(later - dark)))
    return error <= 1e-8, f"deviation after t={t:.4g}: {error:.3g}"


def check_thermal_fixed_point(
    params: ModelParams, settings: SolverSettings
) -> Outcome:
    """Reduced-model steady states equal diag(N+1, N+1, N)/(3N+2)."""
    expected = thermal_fixed_point(params)
    worst = 0.0
    for delta in (-400.0, -139.2, 0.0, 82.3, 400.0):
        report = steady_state(
            build_reduced_liouvillian(params.replace(delta=delta)), settings
        )
        if report.state is None:
            return False, f"degenerate kernel at delta={delta}"
        worst = max(worst, float(np.max(np.abs(report.state - expected))))
    return worst <= 1e-9, f"max deviation {worst:.3g}"


def check_coherence_symmetry(
    params: ModelParams, settings: SolverSettings
) -> Outcome:
    """Re rho01 is even in delta and largest at resonance."""
    sweep = detuning_sweep(params, DELTA_GRID, settings=settings)
    coherence = sweep.column("re_coh")
    asymmetry = float(np.max(np.abs(coherence - coherence[::-1])))
    centre = coherence[len(coherence) // 2]
    excess = float(np.max(coherence) - centre)
    passed = asymmetry <= 1e-9 and excess <= 1e-9
    return passed, f"asymmetry {asymmetry:.3g}, max above centre {excess:.3g}"


def check_spectrum_symmetry(
    params: ModelParams, settings: SolverSettings
) -> Outcome:
    """Probe absorption at resonance is even in omega."""
    spectrum = absorption_spectrum(
        params.replace(delta=0.0), OMEGA_GRID, settings=settings
    )
    values = spectrum.column("a_on")
    scale = float(np.max(np.abs(values)))
    asymmetry = float(np.max(np.abs(values - values[::-1])))
    return asymmetry <= 1e-6 * scale, f"relative asymmetry {asymmetry / scale:.3g}"


def check_linewidths(params: ModelParams, settings: SolverSettings) -> Outcome:
    """Fitted widths without interference match the analytic sideband widths."""
    details = []
    passed = True
    for delta in (0.0, 50.0):
        shifted = params.replace(delta=delta)
        spectrum = absorption_spectrum(shifted, OMEGA_GRID, settings=settings)
        fitted = sideband_linewidths(spectrum, "a_off")
        expected = tuple(side.hwhm for side in uncoupled_sidebands(shifted))
        for got, want in zip(fitted, expected):
            passed = passed and abs(got - want) <= 0.05 * want
        details.append(
            f"delta={delta:g}: fitted {fitted[0]:.4g}/{fitted[1]:.4g}, "
            f"expected {expected[0]:.4g}/{expected[1]:.4g}"
        )
    return passed, "; ".join(details)


def check_oracle(
    params: ModelParams,
    settings: SolverSettings,
    fock: Optional[FockConfig] = None,
) -> Outcome:
    """
    Full atom-cavity model agrees with and converges to the reduced model.

    ``fock`` replaces the built-in truncations of both comparisons.
    """
    steady_fock = fock or FockConfig(n_max=12)
    averaged_fock = fock or FockConfig(tail_tolerance=1e-10)
    steady = oracle_steady_deviation(ORACLE_PARAMS, steady_fock, settings)
    deviations = []
    for ratio in (10.0, 30.0, 100.0):
        scaled = ORACLE_PARAMS.replace(g0=ratio, g1=ratio, kappa=ratio**2)
        deviations.append(
            oracle_averaged_deviation(scaled, 1.0, basis_state(2), averaged_fock)
        )
    monotone = deviations[0] > deviations[1] > deviations[2]
    detail = (
        f"steady deviation {steady:.3g}; averaged deviations "
        + ", ".join(f"{d:.3g}" for d in deviations)
        + f"; n_max {resolve_cutoff(ORACLE_PARAMS, steady_fock)}"
        + f"/{resolve_cutoff(ORACLE_PARAMS, averaged_fock)}"
    )
    return steady <= 1e-3 and monotone, detail


def check_generators(params: ModelParams, settings: SolverSettings) -> Outcome:
    """Trace, Hermiticity, stability, swap symmetry and channel decoupling."""
    check_generator(build_reduced_liouvillian(params), spectrum=False)
    check_generator(build_approx_liouvillian(params))

    symmetric = params.replace(g0=10.0, g1=10.0)
    swap = np.kron(_SWAP, _SWAP)
    worst = 0.0
    for delta in (25.0, 150.0):
        forward = build_reduced_liouvillian(symmetric.replace(delta=delta)).dense()
        mirrored = build_reduced_liouvillian(symmetric.replace(delta=-delta)).dense()
        worst = max(
            worst, float(np.max(np.abs(mirrored - swap @ np.conj(forward) @ swap)))
        )

    plain = build_reduced_liouvillian(params.replace(interference=0.0)).dense()
    leak = max(
        abs(plain[_index(2, 0), _index(2, 1)]),
        abs(plain[_index(2, 1), _index(2, 0)]),
        max(abs(plain[_index(0, 1), _index(i, i)]) for i in range(3)),
    )
    passed = worst <= 1e-12 * la.norm(forward) and leak == 0.0
    return passed, f"swap mismatch {worst:.3g}, cross-channel leak {leak:.3g}"


def check_far_detuned(params: ModelParams, settings: SolverSettings) -> Outcome:
    """Far from resonance interference barely changes the probe lines."""
    delta = 10.0 * max(params.omega10, 2.0 * params.kappa)
    far = params.replace(delta=delta)
    grids = [
        np.linspace(side.center - 8 * side.hwhm, side.center + 8 * side.hwhm, 801)
        for side in uncoupled_sidebands(far)
    ]
    spectrum = absorption_spectrum(far, np.concatenate(grids), settings=settings)
    on, off = spectrum.column("a_on"), spectrum.column("a_off")
    ratio = float(np.max(np.abs(on - off)) / np.max(np.abs(off)))
    return ratio <= 0.05, f"delta={delta:g}: max relative change {ratio:.3g}"


def compare_boundaries(params: ModelParams, settings: SolverSettings) -> Outcome:
    """Inversion boundaries against the tabulated reference values."""
    variants: List[Tuple[str, Dict[str, Any]]] = [
        ("reduced", {"generator": "reduced"}),
        ("approx/bad_cavity", {"generator": "approx", "rates": "bad_cavity"}),
        ("approx/response", {"generator": "approx", "rates": "response"}),
        ("approx/printed", {"generator": "approx", "rates": "printed"}),
    ]
    details = []
    reproduced = False
    for label, options in variants:
        found: Dict[str, List[float]] = {}
        for which in ("d20", "d21"):
            try:
                found[which] = inversion_boundaries(
                    params, which, DELTA_GRID, settings=settings, **options
                )
            except NoSignChangeError:
                found[which] = []
        details.append(f"{label}: d20 {found['d20']}, d21 {found['d21']}")
        if label == "reduced":
            reproduced = all(
                len(found[which]) == len(expected)
                and np.allclose(sorted(found[which]), expected, atol=0.5)
                for which, expected in REFERENCE_BOUNDARIES.items()
            )
    return reproduced, "; ".join(details)


def compare_resonant_inversion(
    params: ModelParams, settings: SolverSettings
) -> Outcome:
    """Both population differences positive at resonance."""
    row = detuning_sweep(params, [0.0], settings=settings).data[0]
    d20, d21 = row[1], row[2]
    return bool(d20 > 0 and d21 > 0), f"d20={d20:.6g}, d21={d21:.6g}"


def compare_probe_gain(params: ModelParams, settings: SolverSettings) -> Outcome:
    """Gain on the lower sideband at delta 50, 100 and the upper one at 200."""
    details = []
    reproduced = True
    for delta, side in ((50.0, 1), (100.0, 1), (200.0, 0)):
        shifted = params.replace(delta=delta)
        line = uncoupled_sidebands(shifted)[side]
        grid = np.linspace(line.center - 3 * line.hwhm, line.center + 3 * line.hwhm)
        spectrum = absorption_spectrum(shifted, grid, settings=settings)
        lowest = float(np.min(spectrum.column("a_on")))
        reproduced = reproduced and lowest < 0
        details.append(f"delta={delta:g}: min absorption {lowest:.4g}")
    return reproduced, "; ".join(details)


def compare_broadening(params: ModelParams, settings: SolverSettings) -> Outcome:
    """Interference broadens both sidebands at resonance."""
    spectrum = absorption_spectrum(
        params.replace(delta=0.0), OMEGA_GRID, settings=settings
    )
    on = sideband_linewidths(spectrum, "a_on")
    off = sideband_linewidths(spectrum, "a_off")
    reproduced = on[0] > off[0] and on[1] > off[1]
    return reproduced, (
        f"with interference {on[0]:.4g}/{on[1]:.4g}, "
        f"without {off[0]:.4g}/{off[1]:.4g}"
    )


GATING_CHECKS: List[Tuple[str, Callable[[ModelParams, SolverSettings], Outcome]]] = [
    ("degenerate_trapping", check_trapping),
    ("trapped_state", check_trapped_state),
    ("thermal_fixed_point", check_thermal_fixed_point),
    ("coherence_symmetry", check_coherence_symmetry),
    ("spectrum_symmetry", check_spectrum_symmetry),
    ("linewidths", check_linewidths),
    ("oracle", check_oracle),
    ("generator_sanity", check_generators),
    ("far_detuned", check_far_detuned),
]

REFERENCE_COMPARISONS: List[
    Tuple[str, Callable[[ModelParams, SolverSettings], Outcome]]
] = [
    ("inversion_boundaries", compare_boundaries),
    ("resonant_inversion", compare_resonant_inversion),
    ("probe_gain", compare_probe_gain),
    ("interference_broadening", compare_broadening),
]


def _run_check(
    name: str,
    check: Callable[[ModelParams, SolverSettings], Outcome],
    params: ModelParams,
    settings: SolverSettings,
    gating: bool,
) -> CheckResult:
    try:
        passed, detail = check(params, settings)
    except (LambdaCavityError, la.LinAlgError) as exc:
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    level = logging.INFO if passed or not gating else logging.WARNING
    logger.log(level, f"{name}: {'ok' if passed else 'no'} ({detail})")
    return CheckResult(name, bool(passed), detail, gating)


def run_acceptance(
    params: Optional[ModelParams] = None,
    settings: Optional[SolverSettings] = None,
    fock: Optional[FockConfig] = None,
) -> ValidationReport:
    """
    Run every acceptance check.

    Args:
        params: Parameter set the checks start from, the reference set when
            omitted
        settings: Solver tolerances
        fock: Fock truncation for the oracle check, built-in cutoffs when
            omitted

    Returns:
        Report whose ``passed`` reflects the gating checks only

    Raises:
        ParameterError: If ``fock`` keeps too much thermal weight in its top
            level for the oracle parameters
    """
    params = params or ModelParams()
    settings = settings or SolverSettings()
    if fock is not None:
        n_max = resolve_cutoff(ORACLE_PARAMS, fock)
        logger.info(f"Oracle check uses n_max={n_max}")
    report = ValidationReport(params)
    for name, check in GATING_CHECKS:
        if check is check_oracle:
            check = partial(check_oracle, fock=fock)
        report.checks.append(_run_check(name, check, params, settings, True))
    for name, check in REFERENCE_COMPARISONS:
        report.checks.append(_run_check(name, check, params, settings, False))
    return report

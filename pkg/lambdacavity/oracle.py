"""
Full atom + cavity master equation on a truncated Fock space.

Serves as a brute-force reference for the reduced atomic generators. The
composite ordering is kron(atom, field), so the dimension is 3 (n_max + 1).
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from .core import ATOM_DIM, ModelParams, Superoperator, sandwich, spost, spre
from .core import atomic_hamiltonian, build_reduced_liouvillian, transition
from .dynamics import as_density_matrix, hermitize, laplace_state, steady_state
from .errors import DegenerateKernelError, DimensionError, ParameterError
from .settings import SolverSettings

logger = logging.getLogger(__name__)


class FockConfig(BaseModel):
    """
    Photon-number truncation of the cavity mode.

    Attributes:
        n_max: Highest Fock level kept, None to choose it from the thermal tail
        tail_tolerance: Upper bound on the thermal weight of level n_max
    """

    model_config = ConfigDict(frozen=True)

    n_max: Optional[int] = Field(None, ge=1)
    tail_tolerance: float = Field(1e-5, gt=0, lt=1)


def thermal_weights(nbar: float, n_max: int) -> np.ndarray:
    """Untruncated thermal occupation probabilities of levels 0..n_max."""
    levels = np.arange(n_max + 1)
    if nbar == 0:
        return (levels == 0).astype(float)
    return nbar**levels / (nbar + 1.0) ** (levels + 1)


def resolve_cutoff(params: ModelParams, fock: FockConfig) -> int:
    """
    Pick or check the Fock cutoff.

    Raises:
        ParameterError: If an explicit cutoff leaves too much thermal weight
            in its top level
    """
    if fock.n_max is None:
        n_max = max(1, math.ceil(4 * params.nbar + 4))
        while thermal_weights(params.nbar, n_max)[-1] >= fock.tail_tolerance:
            n_max += 1
        logger.debug(f"Selected n_max={n_max} for nbar={params.nbar}")
        return n_max
    tail = thermal_weights(params.nbar, fock.n_max)[-1]
    if tail >= fock.tail_tolerance:
        raise ParameterError(
            f"n_max={fock.n_max} keeps thermal weight {tail:.3g} in its top "
            f"level, above tail_tolerance={fock.tail_tolerance}"
        )
    return fock.n_max


def field_operators(n_max: int) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """Truncated annihilation operator and its adjoint."""
    a = sp.diags(np.sqrt(np.arange(1, n_max + 1)), 1, format="csr", dtype=complex)
    return a, a.conj().T.tocsr()


def thermal_field_state(nbar: float, n_max: int) -> np.ndarray:
    """Thermal field state restricted to n_max and renormalised."""
    weights = thermal_weights(nbar, n_max)
    return np.diag(weights / weights.sum()).astype(complex)


def product_state(rho_atom: np.ndarray, rho_field: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(rho_atom, dtype=complex), rho_field)


def build_full_liouvillian(
    params: ModelParams, fock: Optional[FockConfig] = None
) -> Superoperator:
    """
    Generator of the coupled atom-cavity system.

    Includes the free atom, the cavity detuning delta a^dag a, the
    interaction i(g1 A12 + g0 A02) a^dag - h.c. and the thermal cavity
    damping at rate kappa.

    Args:
        params: Model parameters
        fock: Truncation settings, automatic when omitted

    Returns:
        Sparse superoperator of dimension 3 (n_max + 1)
    """
    fock = fock or FockConfig()
    n_max = resolve_cutoff(params, fock)
    a, adag = field_operators(n_max)
    eye_field = sp.identity(n_max + 1, dtype=complex, format="csr")
    eye_atom = sp.identity(ATOM_DIM, dtype=complex, format="csr")

    lowering = params.g1 * transition(1, 2) + params.g0 * transition(0, 2)
    coupling = sp.kron(sp.csr_matrix(lowering), adag, format="csr")
    hamiltonian = (
        sp.kron(sp.csr_matrix(atomic_hamiltonian(params)), eye_field)
        + params.delta * sp.kron(eye_atom, adag @ a)
        + 1j * coupling
        - 1j * coupling.conj().T
    ).tocsr()

    big_a = sp.kron(eye_atom, a, format="csr")
    big_adag = sp.kron(eye_atom, adag, format="csr")
    number = (big_adag @ big_a).tocsr()
    anti_number = (big_a @ big_adag).tocsr()
    emit = params.kappa * (params.nbar + 1.0)
    absorb = params.kappa * params.nbar

    matrix = -1j * (spre(hamiltonian) - spost(hamiltonian))
    matrix = matrix + emit * (
        2.0 * sandwich(big_a, big_adag) - spre(number) - spost(number)
    )
    matrix = matrix + absorb * (
        2.0 * sandwich(big_adag, big_a) - spre(anti_number) - spost(anti_number)
    )
    dim = ATOM_DIM * (n_max + 1)
    logger.debug(f"Built full generator with n_max={n_max} (dim {dim})")
    return Superoperator(dim, sp.csr_matrix(matrix))


def reduce_to_atom(rho_full: np.ndarray) -> np.ndarray:
    """
    Partial trace over the cavity field.

    Raises:
        DimensionError: If the state is not square with a multiple of 3 rows
    """
    rho_full = np.asarray(rho_full, dtype=complex)
    if rho_full.ndim != 2 or rho_full.shape[0] != rho_full.shape[1]:
        raise DimensionError(f"composite state must be square, got {rho_full.shape}")
    if rho_full.shape[0] % ATOM_DIM:
        raise DimensionError(
            f"dimension {rho_full.shape[0]} is not a multiple of {ATOM_DIM}"
        )
    levels = rho_full.shape[0] // ATOM_DIM
    blocks = rho_full.reshape(ATOM_DIM, levels, ATOM_DIM, levels)
    return hermitize(np.einsum("ajbj->ab", blocks))


def trace_distance(first: np.ndarray, second: np.ndarray) -> float:
    """Half the trace norm of the difference of two states."""
    diff = hermitize(np.asarray(first, dtype=complex) - np.asarray(second))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def oracle_steady_deviation(
    params: ModelParams,
    fock: Optional[FockConfig] = None,
    settings: Optional[SolverSettings] = None,
) -> float:
    """Trace distance between the reduced full and reduced-model steady states."""
    full = _unique_state(build_full_liouvillian(params, fock), settings)
    reduced = _unique_state(build_reduced_liouvillian(params), settings)
    deviation = trace_distance(reduce_to_atom(full), reduced)
    logger.info(f"Oracle steady-state deviation {deviation:.3g}")
    return deviation


def oracle_averaged_deviation(
    params: ModelParams,
    rate: float,
    rho_atom0: np.ndarray,
    fock: Optional[FockConfig] = None,
) -> float:
    """
    Compare exponentially weighted trajectory averages of both models.

    The full model starts from rho_atom0 times the thermal field. Since both
    models share their stationary state, transients are what this measures.

    Args:
        params: Model parameters
        rate: Averaging rate, of the order of the atomic decay rate
        rho_atom0: Initial atomic state
        fock: Truncation settings

    Returns:
        Trace distance between the two averaged atomic states
    """
    rho_atom0 = as_density_matrix(rho_atom0, dim=ATOM_DIM)
    fock = fock or FockConfig()
    n_max = resolve_cutoff(params, fock)
    full = build_full_liouvillian(params, fock.model_copy(update={"n_max": n_max}))
    initial = product_state(rho_atom0, thermal_field_state(params.nbar, n_max))
    averaged_full = reduce_to_atom(laplace_state(full, initial, rate))
    averaged_reduced = laplace_state(
        build_reduced_liouvillian(params), rho_atom0, rate
    )
    deviation = trace_distance(averaged_full, averaged_reduced)
    logger.info(
        f"Averaged deviation {deviation:.3g} at kappa={params.kappa}, "
        f"g0={params.g0}, n_max={n_max}"
    )
    return deviation


def truncation_deviation(
    params: ModelParams,
    n_max: int,
    extra: int = 4,
    settings: Optional[SolverSettings] = None,
) -> float:
    """Largest atomic steady-state change when the cutoff grows by ``extra``."""
    states = []
    for cutoff in (n_max, n_max + extra):
        fock = FockConfig(n_max=cutoff, tail_tolerance=0.5)
        full = _unique_state(build_full_liouvillian(params, fock), settings)
        states.append(reduce_to_atom(full))
    return float(np.max(np.abs(states[0] - states[1])))


def _unique_state(
    generator: Superoperator, settings: Optional[SolverSettings]
) -> np.ndarray:
    report = steady_state(generator, settings)
    if report.state is None:
        raise DegenerateKernelError(
            f"stationary state is not unique (kernel {report.kernel_dimension})"
        )
    return report.state

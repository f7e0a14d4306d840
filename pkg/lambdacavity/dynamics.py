"""
Solvers acting on superoperators.

Time evolution, steady states (including degenerate kernels), projection onto
the kernel, exponentially weighted time averages and regression-theorem
correlation transforms.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import Superoperator, devec, trace_row, vec
from .errors import (
    DefectiveKernelError,
    DegenerateKernelError,
    DimensionError,
    NonPhysicalGeneratorError,
    ParameterError,
    SingularResolventError,
    SolverError,
)
from .settings import SolverSettings

logger = logging.getLogger(__name__)

Ordering = Literal["left", "right"]


@dataclass(frozen=True, eq=False)
class SteadyStateReport:
    """
    Outcome of a steady-state search.

    Attributes:
        state: The unique stationary density matrix, or None if the kernel
            is degenerate
        kernel_dimension: Number of independent stationary directions
        spectral_gap: Smallest decay rate among non-stationary modes, None
            when it was not computed (sparse path)
        residual: ||L vec(state)|| / ||L||
    """

    state: Optional[np.ndarray]
    kernel_dimension: int
    spectral_gap: Optional[float]
    residual: float = 0.0

    @property
    def unique(self) -> bool:
        return self.kernel_dimension == 1


def basis_state(index: int, dim: int = 3) -> np.ndarray:
    """Density matrix |index><index|."""
    if not 0 <= index < dim:
        raise DimensionError(f"level {index} outside dimension {dim}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return rho


def projector(ket: Sequence[complex]) -> np.ndarray:
    """Density matrix of a normalised pure state."""
    ket = np.asarray(ket, dtype=complex)
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise ParameterError("cannot normalise a zero vector")
    ket = ket / norm
    return np.outer(ket, ket.conj())


def hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def as_density_matrix(
    rho: np.ndarray, dim: Optional[int] = None, atol: float = 1e-10
) -> np.ndarray:
    """
    Validate a density matrix.

    Args:
        rho: Candidate state
        dim: Required dimension, if any
        atol: Tolerance for Hermiticity, trace and eigenvalue checks

    Returns:
        The state as a complex array

    Raises:
        DimensionError: If the shape is wrong
        ParameterError: If the state is not Hermitian, unit trace and positive
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {rho.shape[0]}")
    if not np.all(np.isfinite(rho)):
        raise ParameterError("density matrix has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise ParameterError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise ParameterError(f"density matrix has trace {np.trace(rho).real:.6g}")
    if np.min(np.linalg.eigvalsh(hermitize(rho))) < -atol:
        raise ParameterError("density matrix has negative eigenvalues")
    return rho


def _checked_state(generator: Superoperator, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (generator.dim, generator.dim):
        raise DimensionError(
            f"state of shape {rho.shape} does not match dim {generator.dim}"
        )
    if not np.all(np.isfinite(rho)):
        raise ParameterError("state has non-finite entries")
    return rho


def evolve(generator: Superoperator, rho0: np.ndarray, t: float) -> np.ndarray:
    """
    Propagate a state: exp(L t) rho0.

    Dense generators use scaling-and-squaring Pade exponentials, sparse ones
    the action of the exponential on the state vector.

    Args:
        generator: Superoperator L
        rho0: Initial state
        t: Non-negative time

    Returns:
        State at time t
    """
    rho0 = _checked_state(generator, rho0)
    if not np.isfinite(t) or t < 0:
        raise ParameterError(f"time must be finite and non-negative, got {t}")
    if t == 0:
        return rho0.copy()
    if generator.is_sparse:
        vector = spla.expm_multiply(generator.matrix.tocsc() * t, vec(rho0))
    else:
        vector = la.expm(generator.dense() * t) @ vec(rho0)
    return devec(vector, generator.dim)


def evolve_series(
    generator: Superoperator, rho0: np.ndarray, times: Sequence[float]
) -> np.ndarray:
    """States at each of ``times``, stacked along the first axis."""
    return np.stack([evolve(generator, rho0, float(t)) for t in times])


def _spectral_gap(matrix: np.ndarray, kernel_dimension: int) -> Optional[float]:
    eigenvalues = la.eigvals(matrix)
    nonzero = eigenvalues[np.argsort(np.abs(eigenvalues))][kernel_dimension:]
    if nonzero.size == 0:
        return None
    return float(np.min(np.abs(nonzero.real)))


def steady_state(
    generator: Superoperator, settings: Optional[SolverSettings] = None
) -> SteadyStateReport:
    """
    Find the stationary states of a generator.

    Args:
        generator: Trace-preserving superoperator
        settings: Solver tolerances

    Returns:
        Report with the unique state, or ``state=None`` and the kernel
        dimension when the kernel is degenerate

    Raises:
        NonPhysicalGeneratorError: If no unit-trace stationary element exists
        DegenerateKernelError: On the sparse path when the kernel is not unique
    """
    settings = settings or SolverSettings()
    if generator.is_sparse and generator.dim**2 > settings.dense_limit:
        return _sparse_steady_state(generator, settings)

    dim = generator.dim
    matrix = generator.dense()
    _, singular, vh = la.svd(matrix)
    threshold = settings.kernel_rtol * singular[0]
    kernel_dimension = int(np.sum(singular <= threshold))
    if kernel_dimension == 0:
        raise NonPhysicalGeneratorError("generator has no stationary direction")

    kernel = vh[-kernel_dimension:].conj().T
    weights = trace_row(dim) @ kernel
    if np.max(np.abs(weights)) <= settings.kernel_rtol:
        raise NonPhysicalGeneratorError("kernel holds no unit-trace element")
    gap = _spectral_gap(matrix, kernel_dimension)

    if kernel_dimension > 1:
        logger.info(f"Degenerate kernel of dimension {kernel_dimension}")
        return SteadyStateReport(None, kernel_dimension, gap)

    state = hermitize(devec(kernel[:, 0] / weights[0], dim))
    residual = float(
        np.linalg.norm(matrix @ vec(state)) / max(np.linalg.norm(matrix), 1e-300)
    )
    if residual > settings.residual_rtol:
        logger.warning(f"Steady-state residual {residual:.3g} is large")
    logger.debug(f"Steady state found, gap={gap}, residual={residual:.3g}")
    return SteadyStateReport(state, 1, gap, residual)


def _sparse_steady_state(
    generator: Superoperator, settings: SolverSettings
) -> SteadyStateReport:
    dim = generator.dim
    matrix = generator.matrix.tocsr()
    # the first row is redundant given trace preservation
    constrained = sp.vstack(
        [sp.csr_matrix(trace_row(dim)[np.newaxis, :]), matrix[1:]], format="csc"
    )
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0
    try:
        solution = spla.splu(constrained).solve(rhs)
    except RuntimeError as exc:
        raise DegenerateKernelError(
            f"trace-constrained system is singular for dim {dim}"
        ) from exc
    state = hermitize(devec(solution, dim))
    residual = float(np.linalg.norm(matrix @ vec(state)) / generator.norm())
    if not np.isfinite(residual) or residual > settings.residual_rtol:
        raise DegenerateKernelError(
            f"sparse steady state is not stationary (residual {residual:.3g})"
        )
    logger.debug(f"Sparse steady state of dim {dim}, residual={residual:.3g}")
    return SteadyStateReport(state, 1, None, residual)


def kernel_projector(
    generator: Superoperator, settings: Optional[SolverSettings] = None
) -> np.ndarray:
    """
    Spectral projector onto the kernel along the remaining generalized
    eigenspaces.

    Raises:
        NonPhysicalGeneratorError: If the kernel is empty
        DefectiveKernelError: If the zero eigenvalue is not semisimple
    """
    settings = settings or SolverSettings()
    matrix = generator.dense()
    right = la.null_space(matrix, rcond=settings.kernel_rtol)
    left = la.null_space(matrix.conj().T, rcond=settings.kernel_rtol).conj().T
    if right.shape[1] == 0:
        raise NonPhysicalGeneratorError("generator has no stationary direction")
    if right.shape[1] != left.shape[0]:
        raise DefectiveKernelError(
            f"left and right kernels differ ({left.shape[0]} vs {right.shape[1]})"
        )
    overlap = left @ right
    if np.linalg.cond(overlap) > settings.defect_cond:
        raise DefectiveKernelError("zero eigenvalue is defective")
    return right @ la.solve(overlap, left)


def asymptotic_state(
    generator: Superoperator,
    rho0: np.ndarray,
    settings: Optional[SolverSettings] = None,
) -> np.ndarray:
    """
    Long-time limit of ``evolve(generator, rho0, t)``.

    Projects rho0 onto the kernel, so degenerate kernels give the
    initial-condition dependent limit. Undamped oscillating modes have no
    limit; the projection then equals the long-time average.
    """
    settings = settings or SolverSettings()
    rho0 = _checked_state(generator, rho0)
    matrix = generator.dense()
    proj = kernel_projector(generator, settings)

    scale = max(np.linalg.norm(matrix), 1.0)
    eigenvalues = la.eigvals(matrix)
    persistent = (np.abs(eigenvalues) > settings.kernel_rtol * scale) & (
        eigenvalues.real > -settings.decay_rtol * scale
    )
    if np.any(persistent):
        logger.info(
            f"{int(np.sum(persistent))} undamped oscillating modes, "
            "returning the time-averaged limit"
        )
    return hermitize(devec(proj @ vec(rho0), generator.dim))


def laplace_state(
    generator: Superoperator, rho0: np.ndarray, rate: float
) -> np.ndarray:
    """
    Exponentially weighted time average rate * int exp(-rate t) rho(t) dt.

    Args:
        generator: Superoperator L
        rho0: Initial state
        rate: Positive averaging rate

    Returns:
        rate * (rate - L)^-1 rho0
    """
    rho0 = _checked_state(generator, rho0)
    if not np.isfinite(rate) or rate <= 0:
        raise ParameterError(f"averaging rate must be positive, got {rate}")
    size = generator.dim**2
    if generator.is_sparse:
        shifted = rate * sp.identity(size, dtype=complex, format="csc")
        shifted = shifted - generator.matrix.tocsc()
        vector = spla.spsolve(shifted, vec(rho0))
    else:
        vector = la.solve(rate * np.eye(size) - generator.dense(), vec(rho0))
    return hermitize(devec(rate * vector, generator.dim))


def resolvent_spectrum(
    generator: Superoperator,
    readout: np.ndarray,
    source: np.ndarray,
    omegas: Sequence[float],
    settings: Optional[SolverSettings] = None,
) -> np.ndarray:
    """
    Evaluate -tr[readout (L + i omega)^-1 source] on a frequency grid.

    The source must lie outside the kernel; the kernel is deflated so that
    omega = 0 stays solvable.

    Args:
        generator: Superoperator L
        readout: Operator A applied at the end
        source: Operator X the resolvent acts on
        omegas: Frequencies
        settings: Solver tolerances

    Returns:
        Complex array with one value per frequency

    Raises:
        SingularResolventError: If ``source`` has a kernel component
    """
    settings = settings or SolverSettings()
    source = _checked_state(generator, source)
    omegas = np.asarray(omegas, dtype=float)
    x = vec(source)
    source_norm = np.linalg.norm(x)
    if source_norm == 0:
        return np.zeros(omegas.shape, dtype=complex)

    matrix = generator.dense()
    proj = kernel_projector(generator, settings)
    leak = np.linalg.norm(proj @ x)
    if leak > settings.kernel_rtol * max(source_norm, 1.0):
        raise SingularResolventError(
            f"source has a stationary component of size {leak:.3g}"
        )

    size = generator.dim**2
    scale = max(np.linalg.norm(matrix, 2), 1.0)
    deflated = matrix + scale * proj
    readout_row = vec(np.asarray(readout, dtype=complex).T)
    values = np.empty(omegas.shape, dtype=complex)
    for index, omega in enumerate(omegas):
        try:
            y = la.solve(deflated + 1j * omega * np.eye(size), x)
        except la.LinAlgError as exc:
            raise SolverError(f"resolvent is singular at omega={omega}") from exc
        values[index] = -(readout_row @ y)
    return values


def correlation_transform(
    generator: Superoperator,
    rho_ss: np.ndarray,
    a_op: np.ndarray,
    b_op: np.ndarray,
    omega: float,
    order: Ordering = "left",
    settings: Optional[SolverSettings] = None,
) -> complex:
    """
    One-sided Fourier transform of a stationary two-time correlation.

    With ``order="left"`` this is int_0^inf exp(i omega tau)
    tr[A exp(L tau)(B rho_ss)] dtau, i.e. <A(tau) B(0)>. ``order="right"``
    uses rho_ss B, the ordering of <B(0) A(tau)>.

    Args:
        generator: Superoperator L
        rho_ss: Stationary state of L
        a_op: Operator read out at time tau
        b_op: Operator applied at time zero
        omega: Frequency
        order: Side on which ``b_op`` multiplies the state
        settings: Solver tolerances

    Returns:
        Complex transform value
    """
    rho_ss = _checked_state(generator, rho_ss)
    b_op = np.asarray(b_op, dtype=complex)
    if order == "left":
        source = b_op @ rho_ss
    elif order == "right":
        source = rho_ss @ b_op
    else:
        raise ParameterError(f"unknown ordering: {order!r}")
    values = resolvent_spectrum(generator, a_op, source, [omega], settings)
    return complex(values[0])

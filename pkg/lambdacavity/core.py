"""
Reduced master equations for a three-level Λ atom in a damped thermal cavity.

Levels are ordered (|0>, |1>, |2>) everywhere. Density matrices are vectorized
by column stacking, so ``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.
"""

import logging
from dataclasses import dataclass
from typing import Any, List, Literal, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse import linalg as sparse_linalg
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import DimensionError, NonPhysicalGeneratorError, ParameterError

logger = logging.getLogger(__name__)

ATOM_DIM = 3

Matrix = Union[np.ndarray, sp.spmatrix]
RateConvention = Literal["bad_cavity", "response", "printed"]
# (coefficient, left, right) stands for coefficient * left @ rho @ right
Term = Tuple[complex, np.ndarray, np.ndarray]


class ModelParams(BaseModel):
    """
    Physical parameters of the atom-cavity system.

    The defaults are the reference parameter set (g0 = g1 = 10, kappa = 100,
    omega10 = 200, nbar = 20, delta = 0, full interference). All frequencies
    share one unit system.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    g0: complex = complex(10.0)
    g1: complex = complex(10.0)
    kappa: float = Field(100.0, gt=0, allow_inf_nan=False)
    omega10: float = Field(200.0, ge=0, allow_inf_nan=False)
    delta: float = Field(0.0, allow_inf_nan=False)
    nbar: float = Field(20.0, ge=0, allow_inf_nan=False)
    interference: float = Field(1.0, ge=0, le=1)

    @field_validator("g0", "g1", mode="before")
    @classmethod
    def _coerce_coupling(cls, value: Any) -> complex:
        if isinstance(value, str):
            value = value.replace(" ", "")
        try:
            coupling = complex(value)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"not a complex number: {value!r}") from exc
        if not (np.isfinite(coupling.real) and np.isfinite(coupling.imag)):
            raise ValueError("coupling must be finite")
        return coupling

    def replace(self, **changes: Any) -> "ModelParams":
        """Return a validated copy with some fields changed."""
        return type(self)(**{**self.model_dump(), **changes})

    @property
    def cross_coupling(self) -> complex:
        """Product g0 * conj(g1) that drives the cross-damping terms."""
        return self.g0 * np.conj(self.g1)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """
    Linear generator acting on column-stacked density matrices.

    Attributes:
        dim: Hilbert-space dimension d
        matrix: d^2 x d^2 matrix, dense for the atom, sparse CSR for the
            atom-cavity system
    """

    dim: int
    matrix: Matrix

    def __post_init__(self) -> None:
        size = self.dim * self.dim
        if self.matrix.shape != (size, size):
            raise DimensionError(
                f"superoperator of dim {self.dim} needs shape {(size, size)}, "
                f"got {self.matrix.shape}"
            )

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        """Return the generator as a dense complex array."""
        if self.is_sparse:
            return self.matrix.toarray()
        return np.asarray(self.matrix, dtype=complex)

    def norm(self) -> float:
        """Frobenius norm of the generator matrix."""
        if self.is_sparse:
            return float(sparse_linalg.norm(self.matrix))
        return float(np.linalg.norm(self.matrix))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Return L[rho] as a d x d matrix."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise DimensionError(
                f"state of shape {rho.shape} does not match dim {self.dim}"
            )
        return devec(self.matrix @ vec(rho), self.dim)


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a square matrix."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def devec(vector: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(vector).reshape((dim, dim), order="F")


def _kron(a: Matrix, b: Matrix) -> Matrix:
    if sp.issparse(a) or sp.issparse(b):
        return sp.kron(a, b, format="csr")
    return np.kron(a, b)


def _identity_like(op: Matrix) -> Matrix:
    size = op.shape[0]
    if sp.issparse(op):
        return sp.identity(size, dtype=complex, format="csr")
    return np.eye(size, dtype=complex)


def spre(op: Matrix) -> Matrix:
    """Superoperator of rho -> op @ rho."""
    return _kron(_identity_like(op), op)


def spost(op: Matrix) -> Matrix:
    """Superoperator of rho -> rho @ op."""
    return _kron(op.T, _identity_like(op))


def sandwich(left: Matrix, right: Matrix) -> Matrix:
    """Superoperator of rho -> left @ rho @ right."""
    return _kron(right.T, left)


def trace_row(dim: int) -> np.ndarray:
    """Row vector w with w @ vec(rho) == trace(rho)."""
    return vec(np.eye(dim))


def transpose_permutation(dim: int) -> np.ndarray:
    """Index permutation mapping vec(X) onto vec(X.T)."""
    index = np.arange(dim * dim)
    rows, cols = index % dim, index // dim
    return rows * dim + cols


def transition(i: int, j: int, dim: int = ATOM_DIM) -> np.ndarray:
    """Atomic transition operator |i><j|."""
    op = np.zeros((dim, dim), dtype=complex)
    op[i, j] = 1.0
    return op


def atomic_hamiltonian(params: ModelParams) -> np.ndarray:
    """Free atomic Hamiltonian (omega10/2)(A11 - A00), excited level at zero."""
    half = params.omega10 / 2.0
    return np.diag([-half, half, 0.0]).astype(complex)


def response_function(params: ModelParams, sign: int) -> complex:
    """
    Cavity response F(+-omega10) = 1 / (kappa + i(delta +- omega10/2)).

    Args:
        params: Model parameters
        sign: +1 for the |1> channel, -1 for the |0> channel

    Returns:
        Complex rate with positive real part

    Raises:
        ParameterError: If sign is not +-1 or kappa is not positive
    """
    if sign not in (1, -1):
        raise ParameterError(f"sign must be +1 or -1, got {sign}")
    if not params.kappa > 0:
        raise ParameterError(f"kappa must be positive, got {params.kappa}")
    return 1.0 / complex(params.kappa, params.delta + sign * params.omega10 / 2.0)


def effective_rates(params: ModelParams) -> Tuple[float, float]:
    """
    Cavity-enhanced decay rates of the two channels.

    Returns:
        (gamma0, gamma1) = (Re F(-omega10)|g0|^2, Re F(+omega10)|g1|^2)
    """
    gamma0 = response_function(params, -1).real * abs(params.g0) ** 2
    gamma1 = response_function(params, +1).real * abs(params.g1) ** 2
    return gamma0, gamma1


def approx_rates(
    params: ModelParams, convention: RateConvention = "bad_cavity"
) -> Tuple[float, float]:
    """
    Decay rates used by the bad-cavity master equation.

    Args:
        params: Model parameters
        convention: ``"bad_cavity"`` for |g|^2/kappa, ``"response"`` for the
            detuned rates of :func:`effective_rates`, ``"printed"`` for
            kappa|g|^2 / (kappa^2 + (delta -+ omega10)^2)

    Returns:
        (gamma0, gamma1)
    """
    kappa = params.kappa
    if convention == "bad_cavity":
        return abs(params.g0) ** 2 / kappa, abs(params.g1) ** 2 / kappa
    if convention == "response":
        return effective_rates(params)
    if convention == "printed":
        gamma0 = kappa * abs(params.g0) ** 2 / (
            kappa**2 + (params.delta - params.omega10) ** 2
        )
        gamma1 = kappa * abs(params.g1) ** 2 / (
            kappa**2 + (params.delta + params.omega10) ** 2
        )
        return gamma0, gamma1
    raise ParameterError(f"unknown rate convention: {convention!r}")


def coupling_phase(params: ModelParams) -> complex:
    """Unit phase of g0 * conj(g1), 1 when either coupling vanishes."""
    product = params.cross_coupling
    if product == 0:
        return complex(1.0)
    return product / abs(product)


def _assemble(hamiltonian: np.ndarray, terms: List[Term]) -> Superoperator:
    # every term is added together with its Hermitian conjugate
    matrix = -1j * (spre(hamiltonian) - spost(hamiltonian))
    for coefficient, left, right in terms:
        if coefficient == 0:
            continue
        matrix = matrix + coefficient * sandwich(left, right)
        matrix = matrix + np.conj(coefficient) * sandwich(
            right.conj().T, left.conj().T
        )
    return Superoperator(hamiltonian.shape[0], matrix)


def build_reduced_liouvillian(
    params: ModelParams, validate: bool = False
) -> Superoperator:
    """
    Atomic generator after adiabatic elimination of the cavity.

    Keeps the full complex responses F(+-omega10), so level shifts and the
    detuning dependence of every rate are included. Cross-damping terms
    carry g0 g1^* and g0^* g1 scaled by ``params.interference``.

    Args:
        params: Model parameters
        validate: Run :func:`check_generator` on the result

    Returns:
        9 x 9 dense superoperator
    """
    f_minus = response_function(params, -1)
    f_plus = response_function(params, +1)
    emit = params.nbar + 1.0
    absorb = params.nbar
    g0_sq = abs(params.g0) ** 2
    g1_sq = abs(params.g1) ** 2
    x0 = params.interference * params.cross_coupling
    x1 = np.conj(x0)

    a = {(i, j): transition(i, j) for i in range(3) for j in range(3)}
    eye = np.eye(ATOM_DIM, dtype=complex)
    terms: List[Term] = [
        (f_minus * emit * g0_sq, a[0, 2], a[2, 0]),
        (-f_minus * emit * g0_sq, a[2, 2], eye),
        (f_minus * emit * x0, a[0, 2], a[2, 1]),
        (f_plus * emit * g1_sq, a[1, 2], a[2, 1]),
        (-f_plus * emit * g1_sq, a[2, 2], eye),
        (f_plus * emit * x1, a[1, 2], a[2, 0]),
        (f_minus * absorb * g0_sq, a[2, 0], a[0, 2]),
        (-f_minus * absorb * g0_sq, eye, a[0, 0]),
        (f_minus * absorb * x0, a[2, 1], a[0, 2]),
        (-f_minus * absorb * x0, eye, a[0, 1]),
        (f_plus * absorb * g1_sq, a[2, 1], a[1, 2]),
        (-f_plus * absorb * g1_sq, eye, a[1, 1]),
        (f_plus * absorb * x1, a[2, 0], a[1, 2]),
        (-f_plus * absorb * x1, eye, a[1, 0]),
    ]
    generator = _assemble(atomic_hamiltonian(params), terms)
    logger.debug(
        f"Built reduced generator: delta={params.delta}, F-={f_minus:.6g}, "
        f"F+={f_plus:.6g}, p={params.interference}"
    )
    if validate:
        check_generator(generator)
    return generator


def build_approx_liouvillian(
    params: ModelParams,
    rates: RateConvention = "bad_cavity",
    validate: bool = False,
) -> Superoperator:
    """
    Bad-cavity generator with real decay rates and no level shifts.

    The cross-damping amplitude is p sqrt(gamma0 gamma1) times the phase of
    g0 g1^*, so the dissipator is of Lindblad form for every p in [0, 1].

    Args:
        params: Model parameters
        rates: Rate convention passed to :func:`approx_rates`
        validate: Run :func:`check_generator` on the result

    Returns:
        9 x 9 dense superoperator
    """
    gamma0, gamma1 = approx_rates(params, rates)
    cross = (
        params.interference * np.sqrt(gamma0 * gamma1) * coupling_phase(params)
    )
    emit = params.nbar + 1.0
    absorb = params.nbar

    a = {(i, j): transition(i, j) for i in range(3) for j in range(3)}
    eye = np.eye(ATOM_DIM, dtype=complex)
    terms: List[Term] = [
        (gamma0 * emit, a[0, 2], a[2, 0]),
        (-gamma0 * emit, a[2, 2], eye),
        (gamma0 * absorb, a[2, 0], a[0, 2]),
        (-gamma0 * absorb, a[0, 0], eye),
        (gamma1 * emit, a[1, 2], a[2, 1]),
        (-gamma1 * emit, a[2, 2], eye),
        (gamma1 * absorb, a[2, 1], a[1, 2]),
        (-gamma1 * absorb, a[1, 1], eye),
        (2.0 * cross * emit, a[0, 2], a[2, 1]),
        (2.0 * cross * absorb, a[2, 1], a[0, 2]),
        (-cross * absorb, a[0, 1], eye),
        (-cross * absorb, eye, a[0, 1]),
    ]
    generator = _assemble(atomic_hamiltonian(params), terms)
    logger.debug(
        f"Built bad-cavity generator ({rates}): gamma0={gamma0:.6g}, "
        f"gamma1={gamma1:.6g}, cross={cross:.6g}"
    )
    if validate:
        check_generator(generator)
    return generator


def check_generator(
    generator: Superoperator, rtol: float = 1e-12, spectrum: bool = True
) -> None:
    """
    Verify trace preservation, Hermiticity preservation and stability.

    Args:
        generator: Superoperator to check
        rtol: Tolerance relative to the generator norm
        spectrum: Also require every eigenvalue in the closed left half-plane

    Raises:
        NonPhysicalGeneratorError: If any property is violated
    """
    scale = max(generator.norm(), 1.0)
    matrix = generator.dense()
    trace_leak = np.linalg.norm(trace_row(generator.dim) @ matrix)
    if trace_leak > rtol * scale:
        raise NonPhysicalGeneratorError(f"generator leaks trace ({trace_leak:.3g})")

    perm = transpose_permutation(generator.dim)
    mirrored = np.conj(matrix[np.ix_(perm, perm)])
    hermitian_leak = np.linalg.norm(matrix - mirrored)
    if hermitian_leak > rtol * scale:
        raise NonPhysicalGeneratorError(
            f"generator breaks Hermiticity ({hermitian_leak:.3g})"
        )

    if spectrum:
        growth = np.max(np.linalg.eigvals(matrix).real)
        if growth > 1e-9 * scale:
            raise NonPhysicalGeneratorError(
                f"generator has a growing mode (Re lambda = {growth:.3g})"
            )

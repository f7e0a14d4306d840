"""
Tests for the dynamics module.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lambdacavity.analysis import thermal_fixed_point
from lambdacavity.core import (
    ModelParams,
    Superoperator,
    build_approx_liouvillian,
    build_reduced_liouvillian,
    transition,
)
from lambdacavity.dynamics import (
    as_density_matrix,
    asymptotic_state,
    basis_state,
    correlation_transform,
    evolve,
    evolve_series,
    kernel_projector,
    laplace_state,
    projector,
    steady_state,
)
from lambdacavity.errors import (
    DimensionError,
    NonPhysicalGeneratorError,
    ParameterError,
    SingularResolventError,
)


@pytest.fixture
def reduced():
    return build_reduced_liouvillian(ModelParams())


@pytest.fixture
def trapping():
    return build_approx_liouvillian(ModelParams(omega10=0.0))


class TestStates:
    """Test cases for density-matrix helpers."""

    def test_basis_state(self):
        """Test basis projectors."""
        rho = basis_state(2)
        assert rho[2, 2] == 1 and np.trace(rho) == 1

    def test_basis_state_out_of_range(self):
        """Test a level outside the atom is rejected."""
        with pytest.raises(DimensionError):
            basis_state(3)

    def test_projector_normalises(self):
        """Test pure states are normalised."""
        rho = projector([1.0, 1.0, 0.0])
        assert np.trace(rho) == pytest.approx(1.0)
        assert rho[0, 1] == pytest.approx(0.5)

    def test_projector_rejects_zero(self):
        """Test the zero vector has no projector."""
        with pytest.raises(ParameterError):
            projector([0.0, 0.0, 0.0])

    def test_as_density_matrix_rejections(self):
        """Test non-physical states are rejected."""
        with pytest.raises(ParameterError):
            as_density_matrix(np.diag([0.5, 0.6, 0.0]))
        with pytest.raises(ParameterError):
            as_density_matrix(np.diag([1.5, -0.5, 0.0]))
        with pytest.raises(ParameterError):
            as_density_matrix(np.array([[0.5, 1.0, 0], [0.0, 0.5, 0], [0, 0, 0]]))
        with pytest.raises(DimensionError):
            as_density_matrix(np.eye(3) / 3.0, dim=2)


class TestEvolve:
    """Test cases for time evolution."""

    def test_zero_time_returns_copy(self, reduced):
        """Test t = 0 returns an equal but independent state."""
        rho0 = basis_state(0)
        result = evolve(reduced, rho0, 0.0)
        assert np.array_equal(result, rho0)
        result[0, 0] = 5.0
        assert rho0[0, 0] == 1.0

    def test_rejects_negative_time(self, reduced):
        """Test negative and non-finite times are rejected."""
        with pytest.raises(ParameterError):
            evolve(reduced, basis_state(0), -1.0)
        with pytest.raises(ParameterError):
            evolve(reduced, basis_state(0), float("inf"))

    def test_rejects_wrong_dimension(self, reduced):
        """Test a state of the wrong size is rejected."""
        with pytest.raises(DimensionError):
            evolve(reduced, np.eye(4) / 4.0, 1.0)

    def test_composition(self, reduced):
        """Test evolve(t1 + t2) equals two successive steps."""
        rho0 = projector([1.0, 1j, 0.5])
        direct = evolve(reduced, rho0, 0.03)
        stepped = evolve(reduced, evolve(reduced, rho0, 0.01), 0.02)
        assert np.allclose(direct, stepped, atol=1e-12)

    def test_preserves_trace_hermiticity_positivity(self):
        """Test physical states stay physical under the bad-cavity generator."""
        generator = build_approx_liouvillian(ModelParams(delta=35.0))
        rho0 = projector([1.0, -1.0, 0.3])
        for rho in evolve_series(generator, rho0, [0.001, 0.01, 0.1, 1.0]):
            assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
            assert np.allclose(rho, rho.conj().T, atol=1e-12)
            assert np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) > -1e-10

    def test_matches_ode_integration(self, reduced):
        """Test the matrix exponential against a Runge-Kutta integration."""
        rho0 = projector([0.2, 1.0, 1.0j])
        t_final = 0.05

        def rhs(_, y):
            return reduced.dense() @ y

        solution = solve_ivp(
            rhs,
            (0.0, t_final),
            rho0.reshape(-1, order="F"),
            method="DOP853",
            rtol=1e-11,
            atol=1e-13,
        )
        integrated = solution.y[:, -1].reshape((3, 3), order="F")
        assert np.allclose(evolve(reduced, rho0, t_final), integrated, atol=1e-8)

    def test_long_time_limit_is_thermal(self, reduced):
        """Test the state relaxes to the thermal fixed point."""
        rho = evolve(reduced, basis_state(2), 50.0)
        assert np.allclose(rho, thermal_fixed_point(ModelParams()), atol=1e-9)


class TestSteadyState:
    """Test cases for steady-state search."""

    def test_unique_state_is_thermal(self, reduced):
        """Test the reduced model relaxes to diag(21, 21, 20) / 62."""
        report = steady_state(reduced)
        assert report.unique
        assert np.allclose(report.state, thermal_fixed_point(ModelParams()), atol=1e-12)
        assert report.spectral_gap > 0
        assert report.residual < 1e-10

    def test_steady_state_is_fixed_point(self, reduced):
        """Test evolving the steady state for 10^3 relaxation times keeps it."""
        report = steady_state(reduced)
        later = evolve(reduced, report.state, 1e3 / report.spectral_gap)
        assert np.max(np.abs(later - report.state)) < 1e-9

    def test_unique_for_every_interference(self):
        """Test the thermal state is reached with and without interference."""
        for interference in (0.0, 0.5):
            params = ModelParams(delta=-60.0, interference=interference)
            report = steady_state(build_reduced_liouvillian(params))
            assert np.allclose(report.state, thermal_fixed_point(params), atol=1e-12)

    def test_degenerate_kernel(self, trapping):
        """Test degenerate ground levels give a two-dimensional kernel."""
        report = steady_state(trapping)
        assert report.state is None
        assert report.kernel_dimension == 2
        assert not report.unique

    def test_no_kernel(self):
        """Test a generator without a stationary direction is rejected."""
        with pytest.raises(NonPhysicalGeneratorError):
            steady_state(Superoperator(3, -np.eye(9, dtype=complex)))

    def test_zero_generator(self):
        """Test the zero generator keeps every state."""
        report = steady_state(Superoperator(3, np.zeros((9, 9), dtype=complex)))
        assert report.state is None
        assert report.kernel_dimension == 9


class TestAsymptoticState:
    """Test cases for kernel projection."""

    def test_trapping_from_excited_level(self, trapping):
        """Test |2> ends thermal between |2> and the bright state."""
        rho = asymptotic_state(trapping, basis_state(2))
        assert rho[2, 2].real == pytest.approx(20.0 / 41.0, abs=1e-10)
        bright = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
        assert (bright @ rho @ bright).real == pytest.approx(21.0 / 41.0, abs=1e-10)

    def test_trapping_from_ground_level(self, trapping):
        """Test half of |0> stays dark."""
        rho = asymptotic_state(trapping, basis_state(0))
        dark = np.array([-1.0, 1.0, 0.0]) / np.sqrt(2.0)
        bright = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
        assert (dark @ rho @ dark).real == pytest.approx(0.5, abs=1e-10)
        assert (bright @ rho @ bright).real == pytest.approx(21.0 / 82.0, abs=1e-10)
        assert rho[2, 2].real == pytest.approx(10.0 / 41.0, abs=1e-10)

    def test_matches_long_evolution(self, trapping):
        """Test the projection agrees with evolving for a long time."""
        rho0 = projector([1.0, 0.3j, 0.5])
        assert np.allclose(
            asymptotic_state(trapping, rho0), evolve(trapping, rho0, 5.0), atol=1e-10
        )

    def test_projector_is_idempotent(self, trapping):
        """Test P^2 = P."""
        proj = kernel_projector(trapping)
        assert np.allclose(proj @ proj, proj, atol=1e-10)


class TestLaplaceState:
    """Test cases for exponentially weighted averages."""

    def test_fast_average_keeps_initial_state(self, reduced):
        """Test a large averaging rate returns the initial state."""
        rho0 = basis_state(1)
        assert np.allclose(laplace_state(reduced, rho0, 1e9), rho0, atol=1e-5)

    def test_slow_average_reaches_steady_state(self, reduced):
        """Test a small averaging rate returns the stationary state."""
        rho = laplace_state(reduced, basis_state(1), 1e-6)
        assert np.allclose(rho, thermal_fixed_point(ModelParams()), atol=1e-5)
        assert np.trace(rho) == pytest.approx(1.0)

    def test_rejects_non_positive_rate(self, reduced):
        """Test the averaging rate must be positive."""
        with pytest.raises(ParameterError):
            laplace_state(reduced, basis_state(0), 0.0)


class TestCorrelationTransform:
    """Test cases for regression-theorem spectra."""

    def test_two_level_lorentzian(self):
        """Test a single decay channel gives rho22 / (41 - i(omega + 100))."""
        params = ModelParams(g1=0.0, delta=100.0)
        generator = build_reduced_liouvillian(params)
        rho = asymptotic_state(generator, basis_state(0))
        assert rho[2, 2].real == pytest.approx(20.0 / 41.0, abs=1e-10)
        for omega in (-250.0, -100.0, 0.0, 75.0):
            value = correlation_transform(
                generator, rho, transition(2, 0), transition(0, 2), omega
            )
            expected = (20.0 / 41.0) / complex(41.0, -(omega + 100.0))
            assert value == pytest.approx(expected, rel=1e-9)

    def test_hermiticity_relation(self, reduced):
        """Test corr_left(A, B, w) = conj(corr_right(A^dag, B^dag, -w))."""
        rho = steady_state(reduced).state
        a_op = transition(2, 0) + 0.3 * transition(2, 1) + transition(1, 1)
        b_op = transition(0, 2) + 2.0 * transition(1, 2) - 0.5j * transition(0, 1)
        omega = 37.0
        left = correlation_transform(reduced, rho, a_op, b_op, omega, "left")
        right = correlation_transform(
            reduced, rho, a_op.conj().T, b_op.conj().T, -omega, "right"
        )
        assert left == pytest.approx(np.conj(right), rel=1e-9)

    def test_decays_at_high_frequency(self, reduced):
        """Test the transform falls off like 1/omega."""
        rho = steady_state(reduced).state
        scale = reduced.norm()
        near = correlation_transform(
            reduced, rho, transition(2, 0), transition(0, 2), 10.0 * scale
        )
        far = correlation_transform(
            reduced, rho, transition(2, 0), transition(0, 2), 1e4 * scale
        )
        assert abs(far) * 100.0 < abs(near)

    def test_zero_frequency_is_finite(self, reduced):
        """Test omega = 0 is solvable."""
        rho = steady_state(reduced).state
        value = correlation_transform(
            reduced, rho, transition(2, 0), transition(0, 2), 0.0
        )
        assert np.isfinite(value)

    def test_stationary_source_is_singular(self, reduced):
        """Test a source with a trace component is rejected."""
        rho = steady_state(reduced).state
        with pytest.raises(SingularResolventError):
            correlation_transform(reduced, rho, transition(2, 2), np.eye(3), 1.0)

    def test_unknown_ordering(self, reduced):
        """Test an unknown ordering is rejected."""
        rho = steady_state(reduced).state
        with pytest.raises(ParameterError):
            correlation_transform(
                reduced, rho, transition(2, 0), transition(0, 2), 1.0, "middle"
            )

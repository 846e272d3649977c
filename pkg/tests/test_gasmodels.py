"""Tests for the ideal-gas and van der Waals closed forms."""

import math
from unittest.mock import patch

import numpy as np
import pytest
from pydantic import ValidationError

from thermoscope import gasmodels
from thermoscope.errors import (
    DivergentIntegralError,
    DomainError,
    GridError,
    InfeasibleTargetError,
    NoCriticalPointError,
)
from thermoscope.gasmodels import (
    EquilibriumPoint,
    GasParameters,
    contact_residual,
    critical_point_from_spinodal,
    cubic_discriminant,
    ideal_energy_from_lambda,
    ideal_entropy,
    ideal_gas_system,
    ideal_log_partition,
    ideal_multipliers,
    ideal_patch,
    ideal_state,
    ideal_volume_from_lambda,
    vdw_critical_point,
    vdw_cubic,
    vdw_energy,
    vdw_multiplier_transform,
    vdw_patch,
    vdw_point,
    vdw_pressure,
    vdw_pressure_slope,
    vdw_state,
    vdw_volume_roots,
)
from thermoscope.maxent import fit_multipliers
from thermoscope.maxwell import spinodal
from thermoscope.rootfinding import RootResult, safeguarded_newton

from conftest import central_difference


class TestGasParameters:
    """Validation of the parameter bundle."""

    def test_defaults(self):
        g = GasParameters()
        assert (g.N, g.m, g.C, g.a, g.b) == (1, 1.0, 1.0, 0.0, 0.0)

    @pytest.mark.parametrize(
        "kwargs", [{"N": 0}, {"m": 0.0}, {"C": -1.0}, {"a": -0.1}, {"b": -1.0}]
    )
    def test_invalid_values_rejected(self, kwargs):
        with pytest.raises(ValidationError):
            GasParameters(**kwargs)

    def test_frozen(self, ideal_gas):
        with pytest.raises(ValidationError):
            ideal_gas.N = 3


class TestIdealClosedForms:
    """Energy, volume, log-partition and entropy of the ideal gas."""

    @pytest.mark.parametrize("N,lambda1,expected", [(1, -1.0, 1.5), (2, -3.0, 1.0)])
    def test_energy_from_lambda(self, N, lambda1, expected):
        assert ideal_energy_from_lambda(lambda1, GasParameters(N=N)) == pytest.approx(expected)

    @pytest.mark.parametrize("N,lambda2,expected", [(1, -1.0, 2.0), (3, -2.0, 2.0)])
    def test_volume_from_lambda(self, N, lambda2, expected):
        assert ideal_volume_from_lambda(lambda2, GasParameters(N=N)) == pytest.approx(expected)

    @pytest.mark.parametrize("value", [0.0, 0.5])
    def test_nonnegative_multiplier_diverges(self, ideal_gas, value):
        with pytest.raises(DivergentIntegralError):
            ideal_energy_from_lambda(value, ideal_gas)
        with pytest.raises(DivergentIntegralError):
            ideal_volume_from_lambda(value, ideal_gas)
        with pytest.raises(DivergentIntegralError):
            ideal_log_partition(-1.0, value, ideal_gas)

    def test_divergent_integral_is_a_domain_error(self):
        assert issubclass(DivergentIntegralError, DomainError)

    def test_log_partition_reference_value(self):
        g = GasParameters(N=1, m=1.0 / (2.0 * math.pi), C=1.0)
        assert ideal_log_partition(-1.0, -1.0, g) == pytest.approx(math.log(2.0 * math.pi), abs=1e-14)

    @pytest.mark.parametrize("N", [1, 2, 5])
    def test_log_partition_gradient(self, N):
        g = GasParameters(N=N, m=1.3, C=0.7)
        lam = np.array([-0.8, -1.7])
        w = lambda x: ideal_log_partition(x[0], x[1], g)  # noqa: E731
        assert central_difference(w, lam, 0, 1e-5) == pytest.approx(
            ideal_energy_from_lambda(lam[0], g), rel=1e-6
        )
        assert central_difference(w, lam, 1, 1e-5) == pytest.approx(
            ideal_volume_from_lambda(lam[1], g), rel=1e-6
        )

    @pytest.mark.slow
    def test_legendre_duality(self, rng):
        for _ in range(1000):
            g = GasParameters(N=int(rng.integers(1, 8)), m=float(rng.uniform(0.1, 3)), C=float(rng.uniform(0.1, 3)))
            U, V = rng.uniform(0.1, 50.0, size=2)
            lambda1 = -1.5 * g.N / U
            lambda2 = -(g.N + 1) / V
            dual = ideal_log_partition(lambda1, lambda2, g) - lambda1 * U - lambda2 * V
            assert ideal_entropy(U, V, g) == pytest.approx(dual, abs=1e-10)

    @pytest.mark.parametrize("N", [1, 3])
    def test_entropy_gradient_is_inverse_temperature_and_pressure_ratio(self, N):
        g = GasParameters(N=N)
        point = np.array([2.5, 4.0])
        S = lambda x: ideal_entropy(x[0], x[1], g)  # noqa: E731
        assert central_difference(S, point, 0, 1e-5) == pytest.approx(1.5 * N / 2.5, abs=1e-6)
        assert central_difference(S, point, 1, 1e-5) == pytest.approx((N + 1) / 4.0, abs=1e-6)

    def test_entropy_domain(self, ideal_gas):
        with pytest.raises(DomainError):
            ideal_entropy(0.0, 1.0, ideal_gas)
        with pytest.raises(DomainError):
            ideal_entropy(1.0, -1.0, ideal_gas)


class TestIdealState:
    """The ideal gas law."""

    def test_energy(self):
        assert ideal_state(3.0, 1.0, GasParameters(N=2)).U == 9.0

    def test_volume(self, ideal_gas):
        assert ideal_state(1.0, 2.0, ideal_gas).V == 1.0

    def test_multipliers(self):
        assert ideal_multipliers(2.0, 3.0) == (-0.5, -1.5)

    @pytest.mark.slow
    def test_gas_law_on_random_states(self, rng):
        for _ in range(1000):
            N = int(rng.integers(1, 50))
            T, P = rng.uniform(0.01, 100.0, size=2)
            point = ideal_state(T, P, GasParameters(N=N))
            assert point.U / (N * T) == pytest.approx(1.5, rel=1e-15)
            assert point.P * point.V / point.T == pytest.approx(N + 1, rel=1e-14)

    def test_gibbs_free_energy(self, ideal_gas):
        p = ideal_state(1.3, 0.7, ideal_gas)
        assert p.gibbs_free_energy == pytest.approx(p.U + p.P * p.V - p.T * p.S, abs=1e-12)

    def test_equilibrium_point_rejects_nonpositive_temperature(self):
        with pytest.raises(DomainError):
            EquilibriumPoint.from_state(1.0, 1.0, 0.0, 1.0, 0.0)

    def test_state_rejects_nonpositive_pressure(self, ideal_gas):
        with pytest.raises(DomainError):
            ideal_state(1.0, 0.0, ideal_gas)


class TestGenericMaxEntAgreement:
    """The reduced two-observable system reproduces the closed forms."""

    @pytest.mark.parametrize("N", [1, 2, 5])
    @pytest.mark.parametrize("T,P", [(1.0, 1.2), (20.0, 1.0), (50.0, 1.0), (1.0, 0.02), (0.05, 3.0)])
    def test_fit_matches_closed_forms(self, N, T, P):
        g = GasParameters(N=N, m=1.0, C=1.0)
        state = ideal_state(T, P, g)
        sol = fit_multipliers([state.U, state.V], ideal_gas_system(g, target=(state.U, state.V)))
        lambda1, lambda2 = ideal_multipliers(T, P)
        assert sol.multipliers[0] == pytest.approx(lambda1, rel=1e-6)
        assert sol.multipliers[1] == pytest.approx(lambda2, rel=1e-6)
        assert ideal_energy_from_lambda(sol.multipliers[0], g) == pytest.approx(state.U, rel=1e-6)
        assert ideal_volume_from_lambda(sol.multipliers[1], g) == pytest.approx(state.V, rel=1e-6)
        assert sol.log_partition == pytest.approx(ideal_log_partition(lambda1, lambda2, g), rel=1e-6)
        assert sol.entropy == pytest.approx(state.S, rel=1e-6)

    def test_domain_follows_target(self, ideal_gas):
        system = ideal_gas_system(ideal_gas, target=(30.0, 40.0))
        energy, height = system.matrix
        assert energy.max() > 30.0 * 20
        assert height.max() > 40.0 * 20

    @pytest.mark.parametrize("target", [(0.0, 1.0), (1.0, -2.0)])
    def test_nonpositive_target_is_infeasible(self, ideal_gas, target):
        with pytest.raises(InfeasibleTargetError):
            ideal_gas_system(ideal_gas, target=target)

    def test_labels(self, ideal_gas):
        assert ideal_gas_system(ideal_gas, energy_nodes=16, height_nodes=16).labels == [
            "kinetic_energy",
            "Lambda",
        ]


class TestVdwPressure:
    """P = -a N^2 / V^2 + N T / (V - bN)."""

    def test_ideal_limit(self, ideal_gas):
        assert vdw_pressure(4.0, 2.0, ideal_gas) == pytest.approx(0.5)

    def test_critical_value(self, vdw_gas):
        assert vdw_pressure(3.0, 8.0 / 27.0, vdw_gas) == pytest.approx(1.0 / 27.0, rel=1e-14)

    def test_large_volume_asymptote(self, vdw_gas):
        assert vdw_pressure(1e6, 0.5, vdw_gas) == pytest.approx(0.5 / 1e6, rel=1e-5)

    def test_small_parameters_approach_ideal(self):
        g = GasParameters(a=1e-8, b=1e-8)
        for v in (0.5, 2.0, 10.0):
            assert vdw_pressure(v, 1.0, g) == pytest.approx(1.0 / v, rel=1e-6)

    def test_excluded_volume(self, vdw_gas):
        with pytest.raises(DomainError):
            vdw_pressure(1.0, 1.0, vdw_gas)

    def test_vectorized(self, vdw_gas):
        v = np.array([2.0, 3.0, 4.0])
        np.testing.assert_allclose(
            vdw_pressure(v, 0.3, vdw_gas), [vdw_pressure(float(x), 0.3, vdw_gas) for x in v]
        )

    def test_slope_matches_finite_difference(self, vdw_gas):
        fd = (vdw_pressure(2.5 + 1e-6, 0.25, vdw_gas) - vdw_pressure(2.5 - 1e-6, 0.25, vdw_gas)) / 2e-6
        assert vdw_pressure_slope(2.5, 0.25, vdw_gas) == pytest.approx(fd, rel=1e-7)


class TestVdwEnergy:
    def test_ideal_limit(self, ideal_gas):
        assert vdw_energy(2.0, 3.0, ideal_gas) == 4.5

    def test_reference_value(self):
        assert vdw_energy(1.0, 1.0, GasParameters(N=1, a=1.0)) == pytest.approx(0.5)

    def test_increasing_in_volume(self, vdw_gas):
        h = 1e-6
        fd = (vdw_energy(2.0 + h, 1.0, vdw_gas) - vdw_energy(2.0 - h, 1.0, vdw_gas)) / (2 * h)
        assert fd == pytest.approx(2.0 / 8.0, rel=1e-7)

    def test_domain(self, vdw_gas):
        with pytest.raises(DomainError):
            vdw_energy(0.0, 1.0, vdw_gas)


class TestCubic:
    """Volume cubic and its roots."""

    def test_synthetic_discriminant(self):
        assert cubic_discriminant(-6.0, 11.0, -6.0) == pytest.approx(4.0, abs=1e-9)

    def test_coefficients(self, vdw_gas):
        cubic = vdw_cubic(0.25, 0.02, vdw_gas)
        assert cubic.alpha == pytest.approx(-(1.0 + 0.25 / 0.02))
        assert cubic.beta == pytest.approx(1.0 / 0.02)
        assert cubic.gamma == pytest.approx(-1.0 / 0.02)
        assert cubic.discriminant == pytest.approx(
            cubic_discriminant(cubic.alpha, cubic.beta, cubic.gamma), rel=1e-12
        )

    def test_ideal_limit_single_root(self, ideal_gas):
        assert vdw_volume_roots(2.0, 0.5, ideal_gas) == [pytest.approx(4.0, rel=1e-14)]

    def test_three_roots_below_tc(self, vdw_gas):
        T, P = 0.9 * 8.0 / 27.0, 0.025
        cubic = vdw_cubic(T, P, vdw_gas)
        roots = vdw_volume_roots(T, P, vdw_gas)
        assert cubic.discriminant > 0.0
        assert len(roots) == 3
        assert roots == sorted(roots)
        assert sum(roots) == pytest.approx(-cubic.alpha, rel=1e-8)
        assert math.prod(roots) == pytest.approx(-cubic.gamma, rel=1e-8)
        for v in roots:
            assert vdw_pressure(v, T, vdw_gas) == pytest.approx(P, abs=1e-9)

    def test_one_root_above_tc(self, vdw_gas):
        roots = vdw_volume_roots(0.4, 0.05, vdw_gas)
        assert len(roots) == 1
        assert vdw_pressure(roots[0], 0.4, vdw_gas) == pytest.approx(0.05, abs=1e-9)

    @pytest.mark.slow
    def test_root_count_follows_discriminant(self, vdw_gas, rng):
        Tc, Pc, _ = vdw_critical_point(vdw_gas)
        for _ in range(1000):
            T = float(rng.uniform(0.5 * Tc, 1.5 * Tc))
            P = float(rng.uniform(0.05 * Pc, 2.0 * Pc))
            expected = 3 if vdw_cubic(T, P, vdw_gas).discriminant > 0.0 else 1
            assert len(vdw_volume_roots(T, P, vdw_gas)) == expected

    @pytest.mark.parametrize("fraction", [0.85, 0.9, 0.95])
    @pytest.mark.parametrize("side", [0, 1])
    @pytest.mark.parametrize("eps", [1e-6, 1e-9, -1e-9, -1e-6])
    def test_near_spinodal_pressure(self, vdw_gas, fraction, side, eps):
        T = fraction * 8.0 / 27.0
        v_s = spinodal(T, vdw_gas)[side]
        P = float(vdw_pressure(v_s, T, vdw_gas)) * (1.0 + eps)
        roots = vdw_volume_roots(T, P, vdw_gas)
        # above the local minimum or below the local maximum the line cuts the loop
        inside_loop = eps > 0.0 if side == 0 else eps < 0.0
        assert len(roots) == (3 if inside_loop else 1)
        assert (vdw_cubic(T, P, vdw_gas).discriminant > 0.0) == inside_loop
        assert np.all(np.diff(roots) > 0.0)
        for v in roots:
            assert vdw_pressure(v, T, vdw_gas) == pytest.approx(P, rel=1e-8)

    def test_tangency_never_overcounts(self, vdw_gas, rng):
        for _ in range(200):
            T = float(rng.uniform(0.85, 0.99)) * 8.0 / 27.0
            v_s = spinodal(T, vdw_gas)[int(rng.integers(2))]
            eps = float(rng.choice([-1.0, 1.0]) * 10.0 ** rng.uniform(-15.0, -8.0))
            roots = vdw_volume_roots(T, float(vdw_pressure(v_s, T, vdw_gas)) * (1.0 + eps), vdw_gas)
            assert 1 <= len(roots) <= 3
            assert np.all(np.diff(roots) > 0.0)

    def test_unconverged_root_is_reported(self, vdw_gas):
        def stalled(f, df, lo, hi, **kwargs):
            result = safeguarded_newton(f, df, lo, hi, **kwargs)
            return RootResult(result.root, result.iterations, False)

        with (
            patch.object(gasmodels, "safeguarded_newton", stalled),
            patch.object(gasmodels.logger, "warning") as mock_warning,
        ):
            roots = vdw_volume_roots(0.4, 0.05, vdw_gas)

        assert len(roots) == 1
        mock_warning.assert_called_once()
        assert "not converged" in mock_warning.call_args.args[0]

    def test_state_points_per_root(self, vdw_gas):
        T = 0.9 * 8.0 / 27.0
        points = vdw_state(T, 0.025, vdw_gas)
        assert len(points) == 3
        for p in points:
            assert p.T == T
            assert p.P == pytest.approx(0.025, abs=1e-9)
            assert p.V > 0.0


class TestCriticalPoint:
    def test_closed_form(self, vdw_gas):
        Tc, Pc, Vc = vdw_critical_point(vdw_gas)
        assert (Tc, Pc, Vc) == (
            pytest.approx(8.0 / 27.0, rel=1e-15),
            pytest.approx(1.0 / 27.0, rel=1e-15),
            pytest.approx(3.0, rel=1e-15),
        )

    @pytest.mark.parametrize("N", [1, 2, 4])
    def test_n_scaling(self, N):
        Tc, Pc, Vc = vdw_critical_point(GasParameters(N=N, a=2.0, b=0.5))
        assert Vc == pytest.approx(1.5 * N)
        assert Tc == pytest.approx(16.0 / 13.5)
        assert Pc == pytest.approx(2.0 / 6.75)

    @pytest.mark.parametrize("N", [1, 3])
    def test_spinodal_route_agrees(self, N):
        g = GasParameters(N=N, a=1.7, b=0.4)
        closed = vdw_critical_point(g)
        numeric = critical_point_from_spinodal(g)
        for x, y in zip(numeric, closed):
            assert x == pytest.approx(y, rel=1e-8)

    def test_discriminant_vanishes(self, vdw_gas):
        Tc, Pc, _ = vdw_critical_point(vdw_gas)
        assert abs(vdw_cubic(Tc, Pc, vdw_gas).scaled_discriminant) <= 1e-8

    @pytest.mark.parametrize("kwargs", [{"a": 0.0, "b": 1.0}, {"a": 1.0, "b": 0.0}])
    def test_requires_attraction_and_excluded_volume(self, kwargs):
        with pytest.raises(NoCriticalPointError):
            vdw_critical_point(GasParameters(**kwargs))


class TestMultiplierTransform:
    def test_no_attraction(self, ideal_gas):
        assert vdw_multiplier_transform(-0.7, -0.2, 3.0, ideal_gas) == (-0.2, -0.7)

    def test_energy_multiplier_off(self, vdw_gas):
        assert vdw_multiplier_transform(0.0, -0.2, 3.0, vdw_gas) == (-0.2, 0.0)

    def test_domain(self, vdw_gas):
        with pytest.raises(DomainError):
            vdw_multiplier_transform(1.0, 1.0, -2.0, vdw_gas)

    @pytest.mark.parametrize("t", [0.1, 0.5, 0.9])
    def test_pairing_identity_along_path(self, vdw_gas, t):
        h = 1e-4
        aN2 = vdw_gas.a * vdw_gas.N**2

        def along(s):
            p = vdw_point(4.0 + 2.0 * s, 0.5 + 0.3 * s, vdw_gas)
            X = p.V + vdw_gas.excluded_volume
            return p, X, p.U + aN2 / X

        p, _, _ = along(t)
        plus, X_plus, Y_plus = along(t + h)
        minus, X_minus, Y_minus = along(t - h)
        lambda_x, lambda_y = vdw_multiplier_transform(1.0 / p.T, p.P / p.T, p.V, vdw_gas)
        dS = (plus.S - minus.S) / (2 * h)
        dX = (X_plus - X_minus) / (2 * h)
        dY = (Y_plus - Y_minus) / (2 * h)
        assert abs(dS - lambda_x * dX - lambda_y * dY) <= 1e-6


class TestContactResidual:
    """First-law defect on sampled equilibrium patches."""

    def test_ideal_patch(self, ideal_gas):
        assert contact_residual(ideal_patch((1.0, 2.0), (1.0, 2.0), 41, ideal_gas)) <= 1e-5

    def test_vdw_single_branch_patch(self, vdw_gas):
        assert contact_residual(vdw_patch((0.4, 0.6), (4.0, 8.0), 41, vdw_gas)) <= 1e-5

    def test_constant_patch(self):
        p = EquilibriumPoint.from_state(1.0, 2.0, 1.5, 0.5, 0.3)
        assert contact_residual([[p] * 3] * 3) == 0.0

    def test_residual_detects_wrong_entropy(self, ideal_gas):
        patch = ideal_patch((1.0, 2.0), (1.0, 2.0), 9, ideal_gas)
        broken = [
            [EquilibriumPoint.from_state(p.U, p.V, p.T, p.P, 2.0 * p.S) for p in row] for row in patch
        ]
        assert contact_residual(broken) > 1e-2

    def test_too_small(self, ideal_gas):
        with pytest.raises(GridError):
            contact_residual(ideal_patch((1.0, 2.0), (1.0, 2.0), 2, ideal_gas))

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ripsolve import systems
from ripsolve.errors import DomainError
from ripsolve.systems import (
    ConstantLoading, EuclideanNorm, LinearLoading, LoadedPotentialEnergy, PolynomialPotential,
    ScaledNorm, System, WeightedL1Norm, distance, global_slope, lambda_multiplier, local_slope,
)


def quadratic_system():
    energy = LoadedPotentialEnergy(PolynomialPotential([0.0, 0.0, 0.5]), ConstantLoading(0.0), horizon=1.0)
    return System(EuclideanNorm(1), energy, [-10.0], [10.0], "quadratic")


class TestDoubleWell:
    def test_profile_values(self):
        # frozen from the piecewise quadratic profile
        assert systems.double_well(-4.0) == 0.0
        assert systems.double_well(4.0) == 0.0
        assert systems.double_well(0.0) == pytest.approx(4.0)
        assert systems.double_well(-2.0) == pytest.approx(2.0)

    def test_derivative_matches_finite_difference(self):
        h = 1e-6
        for x in (-7.3, -4.5, -2.0, -0.3, 0.7, 3.1, 5.5, 8.2):
            fd = (systems.double_well(x + h) - systems.double_well(x - h)) / (2 * h)
            assert systems.double_well_derivative(x) == pytest.approx(fd, abs=1e-5)


class TestLocalSlope:
    def test_examples(self, ex51, ex54):
        assert local_slope(ex51.system, 3.0, -2.0) == pytest.approx(1.0, abs=1e-12)
        assert local_slope(ex51.system, 0.0, -4.0) == pytest.approx(0.0, abs=1e-12)
        assert local_slope(ex54.system, 3.0, [0.0, 0.0]) == pytest.approx(3.0, abs=1e-12)

    def test_rejects_outside_box(self, ex51):
        with pytest.raises(DomainError):
            local_slope(ex51.system, 1.0, 11.0)
        with pytest.raises(DomainError):
            local_slope(ex51.system, 7.0, 0.0)

    def test_rejects_wrong_dimension(self, ex54):
        with pytest.raises(DomainError):
            local_slope(ex54.system, 1.0, [0.0])


class TestGlobalSlope:
    def test_tied_wells(self, ex51):
        assert global_slope(ex51.system, 1.0, -4.0) == pytest.approx(1.0, abs=1e-3)

    def test_convex_minimum_is_zero(self):
        assert global_slope(quadratic_system(), 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_beyond_tie_exceeds_one(self, ex51):
        assert global_slope(ex51.system, 1.5, -3.5) > 1.0

    @pytest.mark.parametrize("t,q", [(0.5, -4.2), (2.0, -2.5), (4.0, 5.0), (5.5, 6.0)])
    def test_dominates_local_slope(self, ex51, t, q):
        assert global_slope(ex51.system, t, q) >= local_slope(ex51.system, t, q) - 1e-9


class TestDistance:
    def test_examples(self, ex51, ex54):
        assert distance(ex51.system, -4.0, 4.0) == pytest.approx(8.0, abs=1e-12)
        assert distance(ex54.system, [-2.0, -2.0], [6.0, 6.0]) == pytest.approx(8.0, abs=1e-12)
        assert distance(ex51.system, 1.5, 1.5) == 0.0

    def test_state_dependent_norm_uses_quadrature(self):
        norm = ScaledNorm(EuclideanNorm(1), lambda q: 1.0 + q[..., 0] ** 2)
        energy = LoadedPotentialEnergy(PolynomialPotential([0.0]), ConstantLoading(), 1.0)
        sys = System(norm, energy, [-2.0], [2.0])
        # integral of 1 + q^2 over [0, 1]
        assert distance(sys, 0.0, 1.0) == pytest.approx(4.0 / 3.0, rel=1e-9)


class TestLambdaMultiplier:
    def test_examples(self, ex51):
        assert lambda_multiplier(ex51.system, 0.0, -4.4) == pytest.approx(1.0)
        assert lambda_multiplier(ex51.system, 3.0, 0.0) == pytest.approx(3.0)
        assert lambda_multiplier(ex51.system, 2.0, -3.0) == pytest.approx(1.0)


class TestNorms:
    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=2),
           st.lists(st.floats(-50, 50), min_size=2, max_size=2),
           st.floats(-5, 5))
    def test_axioms(self, u, v, c):
        u, v = np.array(u), np.array(v)
        q = np.zeros(2)
        for norm in (EuclideanNorm(2), WeightedL1Norm([0.5, 0.5]), WeightedL1Norm([1.0, 3.0])):
            nu, nv = float(norm.evaluate(q, u)), float(norm.evaluate(q, v))
            assert nu >= 0
            assert float(norm.evaluate(q, c * u)) == pytest.approx(abs(c) * nu, rel=1e-12, abs=1e-12)
            assert float(norm.evaluate(q, u + v)) <= nu + nv + 1e-9

    @given(st.lists(st.floats(-20, 20), min_size=2, max_size=2),
           st.lists(st.floats(-20, 20), min_size=2, max_size=2))
    def test_dual_pairing_bound(self, v, xi):
        v, xi = np.array(v), np.array(xi)
        q = np.zeros(2)
        for norm in (EuclideanNorm(2), WeightedL1Norm([0.5, 0.5])):
            assert abs(xi @ v) <= float(norm.dual_evaluate(q, xi)) * float(norm.evaluate(q, v)) + 1e-9

    def test_weighted_l1_dual_is_weighted_max(self):
        norm = WeightedL1Norm([0.5, 0.5])
        assert float(norm.dual_evaluate(np.zeros(2), np.array([1.0, -3.0]))) == pytest.approx(6.0)


class TestEnergyDerivatives:
    @pytest.mark.parametrize("example", ["ex51", "ex52", "ex54"])
    def test_finite_differences(self, example, rng):
        from ripsolve.catalog import catalog
        sys = catalog(example).system
        e = sys.energy
        h = 1e-6
        for _ in range(20):
            t = rng.uniform(0.1, sys.horizon - 0.1)
            if any(abs(t - k) < 1e-3 for k in e.time_knots):
                continue
            q = rng.uniform(-9, 9, size=sys.dimension)
            dt = (e.evaluate(t + h, q) - e.evaluate(t - h, q)) / (2 * h)
            assert float(e.partial_t(t, q)) == pytest.approx(float(dt), abs=1e-5)
            for i in range(sys.dimension):
                dq = np.zeros(sys.dimension)
                dq[i] = h
                fd = (e.evaluate(t, q + dq) - e.evaluate(t, q - dq)) / (2 * h)
                assert float(e.grad_q(t, q)[i]) == pytest.approx(float(fd), abs=1e-4)


class TestSystemSerialization:
    @pytest.mark.parametrize("example", ["ex51", "ex52", "ex54"])
    def test_round_trip(self, example):
        from ripsolve.catalog import catalog
        sys = catalog(example).system
        back = systems.system_from_dict(sys.to_dict())
        t, q = 2.5, np.linspace(-3, 3, sys.dimension)
        assert float(back.energy.evaluate(t, q)) == pytest.approx(float(sys.energy.evaluate(t, q)))
        assert back.horizon == sys.horizon

    def test_bounds_validation(self):
        energy = LoadedPotentialEnergy(PolynomialPotential([0.0]), LinearLoading(), 1.0)
        with pytest.raises(DomainError):
            System(EuclideanNorm(1), energy, [1.0], [0.0])
        with pytest.raises(DomainError):
            System(EuclideanNorm(1), energy, [-np.inf], [0.0])

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ripsolve.bvcalc import (
    chain_rule_residual, cumulative_functionals, gamma_func, gamma_star, jump_relation_residuals,
    max_decrease, max_increase, path_integral, sigma0, sigma1, slope_distance,
)
from ripsolve.catalog import catalog
from ripsolve.curves import Trajectory, piecewise_bv
from ripsolve.errors import DomainError
from ripsolve.systems import ConstantLoading, DoubleWellPotential, EuclideanNorm, LoadedPotentialEnergy, System
from ripsolve.viscous import SolverOptions, solve_viscous

EX51 = catalog("ex51")


def unloaded_well(horizon=1.0):
    energy = LoadedPotentialEnergy(DoubleWellPotential(), ConstantLoading(0.0), horizon)
    return System(EuclideanNorm(1), energy, [-10.0], [10.0], "unloaded")


def constant(value, t0=0.0, t1=1.0):
    return piecewise_bv([t0, t1], [lambda t: value])


class TestSlopeDistance:
    def test_jump_value(self):
        s0 = slope_distance(EX51.system, 3.0, [-2.0], [6.0])
        assert s0 == pytest.approx(24.0, abs=1e-4)
        e = EX51.system.energy
        drop = float(e.evaluate(3.0, [-2.0]) - e.evaluate(3.0, [6.0]))
        assert s0 == pytest.approx(drop, abs=1e-6)

    def test_same_point(self):
        assert slope_distance(EX51.system, 2.0, [1.0], [1.0]) == 0.0

    def test_alpha_one(self):
        assert slope_distance(EX51.system, 0.0, [-5.0], [-4.0], alpha=1.0) == pytest.approx(1.0, abs=1e-9)

    def test_exact_method_rejects_2d(self):
        ex54 = catalog("ex54")
        with pytest.raises(DomainError):
            slope_distance(ex54.system, 3.0, [-2.0, -2.0], [6.0, 6.0], method="exact_1d")

    def test_two_dimensional_diagonal(self):
        ex54 = catalog("ex54")
        val = slope_distance(ex54.system, 3.0, [-2.0, -2.0], [6.0, 6.0])
        assert val == pytest.approx(24.0, abs=1e-3)

    def test_path_integral_straight(self):
        path = np.linspace([-2.0], [6.0], 33)
        assert path_integral(EX51.system, 3.0, path) == pytest.approx(24.0, abs=1e-6)

    @given(st.floats(0, 6), st.floats(-9, 9), st.floats(-9, 9), st.floats(0, 3))
    @settings(max_examples=40)
    def test_invariants(self, t, a, b, alpha):
        sys = EX51.system
        s_ab = slope_distance(sys, t, [a], [b], alpha=alpha)
        assert s_ab == pytest.approx(slope_distance(sys, t, [b], [a], alpha=alpha), abs=1e-9, rel=1e-9)
        s0 = slope_distance(sys, t, [a], [b])
        assert s0 <= s_ab + 1e-9
        assert s_ab <= slope_distance(sys, t, [a], [b], alpha=alpha + 0.5) + 1e-9
        e = sys.energy
        assert abs(float(e.evaluate(t, [b]) - e.evaluate(t, [a]))) <= s0 + 1e-8


class TestBudgets:
    def test_sigma0_bv_solution(self):
        budget = sigma0(EX51.system, EX51.reference["bv"], 0.0, 4.0)
        assert budget.sigma0 == pytest.approx(28.0, abs=1e-6)
        assert budget.gamma == pytest.approx(28.0, abs=1e-6)
        assert budget.sigma1 == pytest.approx(28.0, abs=1e-6)

    def test_sigma0_slip_segment(self):
        assert sigma0(EX51.system, EX51.reference["bv"], 0.0, 1.0).sigma0 == pytest.approx(1.0, abs=1e-9)

    def test_constant_trajectory(self):
        sys = unloaded_well()
        bv = constant(-4.0)
        budget = sigma0(sys, bv)
        assert (budget.sigma0, budget.gamma, budget.sigma1) == (0.0, 0.0, 0.0)

    def test_gamma_matches_on_bv_solution(self):
        assert gamma_func(EX51.system, EX51.reference["bv"], 0.0, 4.0) == pytest.approx(28.0, abs=1e-6)

    def test_gamma_below_sigma0_for_energetic_jump(self):
        bv = EX51.reference["energetic"]
        g = gamma_func(EX51.system, bv, 0.0, 2.0)
        s = sigma0(EX51.system, bv, 0.0, 2.0).sigma0
        # drop 8 against slope distance 10 across the barrier
        assert g == pytest.approx(2.0 + 8.0, abs=1e-6)
        assert s == pytest.approx(2.0 + 10.0, abs=1e-6)
        assert g < s

    def test_sigma1_sticking_below_threshold(self):
        assert sigma1(unloaded_well(), constant(-4.5)) == pytest.approx(0.0, abs=1e-12)

    def test_sigma1_pinned_above_threshold(self):
        assert sigma1(unloaded_well(), constant(-6.0)) == pytest.approx(1.0, abs=1e-9)

    @given(st.floats(0.0, 6.0), st.floats(0.0, 6.0), st.floats(0.0, 6.0))
    @settings(max_examples=30)
    def test_additivity(self, a, b, c):
        r, s, t = sorted((a, b, c))
        bv = EX51.reference["bv"]
        whole = sigma0(EX51.system, bv, r, t)
        left = sigma0(EX51.system, bv, r, s)
        right = sigma0(EX51.system, bv, s, t)
        for name in ("sigma0", "gamma", "sigma1"):
            assert getattr(whole, name) == pytest.approx(getattr(left, name) + getattr(right, name), abs=1e-6)

    def test_cumulative_matches_direct(self):
        bv = EX51.reference["bv"]
        cf = cumulative_functionals(EX51.system, bv)
        assert cf.sigma0[-1] == pytest.approx(sigma0(EX51.system, bv).sigma0, abs=1e-9)

    def test_interval_outside_rejected(self):
        with pytest.raises(DomainError):
            sigma0(EX51.system, EX51.reference["bv"], 2.0, 7.0)

    def test_budget_json(self):
        import json
        doc = json.loads(sigma0(EX51.system, EX51.reference["bv"], 0.0, 4.0).to_json())
        assert doc["interval"] == [0.0, 4.0]


class TestGammaStar:
    def test_energetic_solution(self):
        assert gamma_star(EX51.system, EX51.reference["energetic"], 0.0, 2.0) == pytest.approx(10.0, abs=1e-3)

    def test_constant_stable(self):
        assert gamma_star(unloaded_well(), constant(-4.0)) == pytest.approx(0.0, abs=1e-9)

    def test_dominates_sigma1_on_bv_solution(self):
        bv = EX51.reference["bv"]
        gs = gamma_star(EX51.system, bv, 2.0, 4.0)
        s1 = sigma1(EX51.system, bv, 2.0, 4.0)
        assert s1 == pytest.approx(26.0, abs=1e-6)
        # globally unstable on [2, 3): strictly above Sigma_1
        assert gs > s1 + 1.0


class TestChainRule:
    def test_bv_solution_equality(self):
        assert chain_rule_residual(EX51.system, EX51.reference["bv"], 0.0, 4.0) == pytest.approx(0.0, abs=1e-6)

    def test_constant_curve(self):
        assert chain_rule_residual(unloaded_well(), constant(-3.0)) == 0.0

    def test_viscous_sample(self):
        traj = solve_viscous(EX51.system, [-5.0], np.linspace(0, 6, 601), 1e-1, SolverOptions(step=1e-2))
        assert chain_rule_residual(EX51.system, traj.as_bv()) >= -1e-6

    def test_random_sampled_curves_nonnegative(self, rng):
        for _ in range(25):
            ts = np.linspace(0.0, 6.0, 13)
            qs = np.clip(np.cumsum(rng.normal(0, 2, ts.size)) - 4, -9.5, 9.5)
            bv = Trajectory(ts, qs[:, None]).as_bv()
            assert chain_rule_residual(EX51.system, bv) >= -1e-6


class TestJumpRelations:
    @pytest.mark.parametrize("example,name", [("ex51", "bv"), ("ex52", "bv_q1"), ("ex54", "bv")])
    def test_closed_form_references(self, example, name):
        spec = catalog(example)
        for row in jump_relation_residuals(spec.system, spec.reference[name]):
            values = [v for k, v in row.items() if "resid" in k]
            assert values and max(abs(v) for v in values) <= 1e-6


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_max_increase_decrease(values):
    v = np.array(values)
    brute_up = max([0.0] + [v[j] - v[i] for i in range(v.size) for j in range(i, v.size)])
    brute_down = max([0.0] + [v[i] - v[j] for i in range(v.size) for j in range(i, v.size)])
    assert max_increase(v) == pytest.approx(brute_up)
    assert max_decrease(v) == pytest.approx(brute_down)

import json

import numpy as np
import pytest

from conftest import SWEEP_EPS, SWEEP_TAU, sweep
from ripsolve import solutions
from ripsolve.catalog import catalog, local_solution
from ripsolve.curves import make_curve, piecewise_bv
from ripsolve.errors import DomainError, PreconditionError
from ripsolve.reparam import renormalize
from ripsolve.systems import (
    CallableEnergy, ConstantLoading, DoubleWellPotential, EuclideanNorm, LinearLoading, LoadedPotentialEnergy,
    PolynomialPotential, System,
)
from ripsolve.transition import TransitionCost

EX51, EX52, EX54 = catalog("ex51"), catalog("ex52"), catalog("ex54")


def unloaded_well(horizon=1.0):
    energy = LoadedPotentialEnergy(DoubleWellPotential(), ConstantLoading(0.0), horizon)
    return System(EuclideanNorm(1), energy, [-10.0], [10.0], "unloaded")


def convex_system(horizon=3.0):
    energy = LoadedPotentialEnergy(PolynomialPotential([0.0, 0.0, 0.5]), LinearLoading(1.0), horizon)
    return System(EuclideanNorm(1), energy, [-10.0], [10.0], "convex")


def symmetric_tie_system(horizon=3.0):
    def value(t, q):
        return (0.5 + t) * (q[..., 0] ** 2 - 1.0) ** 2

    def partial_t(t, q):
        return (q[..., 0] ** 2 - 1.0) ** 2 + 0.0 * t

    def grad_q(t, q):
        return (4.0 * (0.5 + np.asarray(t)) * q[..., 0] * (q[..., 0] ** 2 - 1.0))[..., None]

    energy = CallableEnergy(value, partial_t, grad_q, 1, horizon)
    return System(EuclideanNorm(1), energy, [-3.0], [3.0], "symmetric")


@pytest.fixture(scope="module")
def energetic_ex51():
    return solutions.solve_energetic(EX51.system, EX51.q0)


class TestValidateParametrized:
    def test_arclength_references_pass(self):
        for spec, name in ((EX51, "arclength"), (EX52, "arclength_1"), (EX52, "arclength_2"), (EX54, "arclength")):
            rep = solutions.validate_parametrized(spec.system, spec.reference[name])
            assert rep.passed, (spec.id, name, rep.summary())
            assert max(c.residual for c in rep.conditions) <= 1e-6

    def test_slow_drift_below_threshold_fails(self):
        curve = make_curve(EX51.system, [0.0, 0.5, 1.0], [0.5, 0.625, 0.75], [-4.0, -3.875, -3.75])
        rep = solutions.validate_parametrized(EX51.system, curve)
        assert not rep.passed
        assert not rep.condition("regime_implications").passed

    def test_cost_independence(self):
        for spec, name in ((EX51, "arclength"), (EX52, "arclength_1"), (EX52, "arclength_2")):
            a = solutions.validate_parametrized(spec.system, spec.reference[name], M="Mzero")
            b = solutions.validate_parametrized(spec.system, spec.reference[name], M=TransitionCost.mtilde())
            assert a.passed == b.passed

    def test_reparametrization_invariance(self):
        ref = EX51.reference["arclength"]
        s = np.linspace(0.0, ref.span, 81)
        t, q = ref(s)
        s_new = np.sqrt(s * ref.span)
        warped = make_curve(EX51.system, s_new, t, q)
        assert not warped.normalized
        assert solutions.validate_parametrized(EX51.system, warped).passed
        assert solutions.validate_parametrized(EX51.system, renormalize(EX51.system, warped)).passed

    def test_decreasing_time_rejected(self):
        curve = make_curve(EX51.system, [0.0, 1.0, 2.0], [0.0, 1.0, 0.5], [-5.0, -5.0, -5.0])
        rep = solutions.validate_parametrized(EX51.system, curve)
        assert not rep.condition("a_monotone_time").passed

    def test_report_serialization(self):
        rep = solutions.validate_parametrized(EX51.system, EX51.reference["arclength"])
        doc = json.loads(rep.to_json())
        assert doc["concept"] and all("pass" in c for c in doc["conditions"])


class TestValidateBV:
    def test_two_bv_solutions_pass(self):
        assert solutions.validate_bv(EX52.system, EX52.reference["bv_q1"]).passed
        assert solutions.validate_bv(EX52.system, EX52.reference["bv_q2"]).passed

    def test_energetic_fails_jump_path(self):
        rep = solutions.validate_bv(EX51.system, EX51.reference["energetic"])
        assert not rep.passed
        assert not rep.condition("d_beta_slope").passed

    def test_constant_subcritical_state(self):
        bv = piecewise_bv([0.0, 1.0], [lambda t: -4.5])
        assert solutions.validate_bv(unloaded_well(), bv).passed

    def test_missing_path_in_2d(self):
        from ripsolve.curves import JumpRecord
        j = EX54.reference["bv"].jumps[0]
        bare = JumpRecord(j.t, j.q_minus, j.q_point, j.q_plus)
        bv = EX54.reference["bv"]
        stripped = type(bv)(bv.pieces, (bare,), bv.convention)
        rep = solutions.validate_bv(EX54.system, stripped)
        assert not rep.condition("d_alpha_path").passed


class TestValidateEnergetic:
    def test_energetic_reference_passes(self):
        assert solutions.validate_energetic(EX51.system, EX51.reference["energetic"]).passed

    def test_bv_solution_fails_stability(self):
        rep = solutions.validate_energetic(EX51.system, EX51.reference["bv"])
        assert not rep.condition("S_global_stability").passed

    def test_stable_constant_state(self):
        bv = piecewise_bv([0.0, 1.0], [lambda t: -4.0])
        assert solutions.validate_energetic(unloaded_well(), bv).passed


class TestValidateLocal:
    def test_local_solution_passes(self):
        assert solutions.validate_local(EX51.system, local_solution(2.0, 6.0)).passed

    def test_local_solution_fails_the_other_concepts(self):
        bv = local_solution(2.0, 6.0)
        assert not solutions.validate_energetic(EX51.system, bv).condition("S_global_stability").passed
        assert not solutions.validate_bv(EX51.system, bv).passed

    def test_inclusions_on_corpus(self):
        corpus = [(EX51, "energetic"), (EX51, "bv"), (EX52, "bv_q1"), (EX52, "bv_q2"), (EX54, "bv"),
                  (catalog("ex53", delta=-0.5), "q_delta"), (catalog("ex53", delta=0.2), "q_delta")]
        for spec, name in corpus:
            bv = spec.reference[name]
            if solutions.validate_bv(spec.system, bv).passed or \
                    solutions.validate_energetic(spec.system, bv, include_gamma_star=False).passed:
                assert solutions.validate_local(spec.system, bv).passed, (spec.id, name)


class TestSolveEnergetic:
    def test_jump_time(self, energetic_ex51):
        dt = 6.0 / 600
        assert energetic_ex51.jump_times.size == 1
        assert abs(energetic_ex51.jump_times[0] - 1.0) <= 2 * dt

    def test_matches_closed_form_off_the_jump(self, energetic_ex51):
        dt = 6.0 / 600
        ref = EX51.reference["energetic"]
        for t in np.linspace(0.0, 6.0, 301):
            if 1.0 - 1e-9 <= t <= 1.0 + 2 * dt:
                continue
            assert float(energetic_ex51(t)[0]) == pytest.approx(float(ref(t)[0]), abs=2 * 20.0 / 4000)

    def test_output_is_energetic(self, energetic_ex51):
        # the jump lands one step late, which costs 8 dt in the energy balance
        rep = solutions.validate_energetic(EX51.system, energetic_ex51, tol=10 * 6.0 / 600, include_gamma_star=False)
        assert rep.passed, rep.summary()

    def test_convex_energy_no_jumps(self):
        sys = convex_system()
        bv = solutions.solve_energetic(sys, [0.0], t_grid=np.linspace(0, 3, 121))
        assert bv.jumps == ()
        assert float(bv(0.5)[0]) == pytest.approx(0.0, abs=1e-2)
        assert float(bv(2.5)[0]) == pytest.approx(1.5, abs=1e-2)

    def test_symmetric_tie_takes_smaller_branch(self):
        sys = symmetric_tie_system()
        a = solutions.solve_energetic(sys, [0.0], t_grid=np.linspace(0, 3, 61))
        b = solutions.solve_energetic(sys, [0.0], t_grid=np.linspace(0, 3, 61))
        # both wells are equally good; incremental minimization settles where the slope reaches 1
        assert -1.0 <= float(a(3.0)[0]) < -0.9
        assert np.all(a.sample_times() >= 0) and float(a(1.5)[0]) < 0
        assert np.array_equal(a(3.0), b(3.0))

    def test_unstable_start_raises_with_witness(self):
        with pytest.raises(PreconditionError) as info:
            solutions.solve_energetic(EX51.system, [2.0], t_grid=np.linspace(0, 1, 11))
        assert info.value.witness is not None


class TestJumpTransition:
    def test_scalar_jump(self):
        rec = solutions.jump_transition(EX51.system, 3.0, [-2.0])
        assert float(rec.q_plus[0]) == pytest.approx(6.0, abs=1e-6)
        assert rec.info["energy_drop"] == pytest.approx(24.0, abs=1e-6)

    def test_degenerate_start(self):
        rec = solutions.jump_transition(EX52.system, 1.0, [-4.0])
        assert rec.degenerate

    def test_diagonal_jump(self):
        rec = solutions.jump_transition(EX54.system, 3.0, [-2.0, -2.0])
        assert rec.q_plus == pytest.approx([6.0, 6.0], abs=1e-4)
        assert rec.info["energy_drop"] == pytest.approx(24.0, abs=1e-3)

    def test_subcritical_start_rejected(self):
        with pytest.raises((PreconditionError, DomainError)):
            solutions.jump_transition(EX51.system, 0.5, [-4.0])


class TestPhi:
    def test_non_jumping_curve_constant(self):
        s = np.linspace(0.0, 16.0, 33)
        assert solutions.phi_values(EX52.system, EX52.reference["arclength_2"], s) == pytest.approx(0.5, abs=1e-6)

    def test_jumping_curve_value(self):
        assert solutions.phi_functional(EX52.system, EX52.reference["arclength_1"], 8.0) == \
            pytest.approx(-1.5, abs=1e-3)

    def test_origin_value(self):
        e0 = float(EX52.system.energy.evaluate(0.0, EX52.q0))
        assert solutions.phi_functional(EX52.system, EX52.reference["arclength_1"], 0.0) == pytest.approx(e0)

    def test_nonincreasing_along_solutions(self):
        s = np.linspace(0.0, 16.0, 161)
        for name in ("arclength_1", "arclength_2"):
            vals = solutions.phi_values(EX52.system, EX52.reference[name], s)
            assert np.all(np.diff(vals) <= 1e-9)

    def test_order(self):
        c1, c2 = EX52.reference["arclength_1"], EX52.reference["arclength_2"]
        assert solutions.phi_order(EX52.system, c1, c2).order == "precedes"
        assert solutions.phi_order(EX52.system, c2, c1).order == "not_precedes"
        same = solutions.phi_order(EX52.system, c1, c1)
        assert same.order == "precedes"
        assert same.disagreement_S == pytest.approx(c1.span)

    def test_mismatched_origins(self):
        shifted = make_curve(EX52.system, [0.0, 6.0], [0.0, 3.0], [-4.0, -1.0])
        with pytest.raises(DomainError):
            solutions.phi_order(EX52.system, EX52.reference["arclength_1"], shifted)

    def test_unnormalized_rejected(self):
        stretched = make_curve(EX52.system, [0.0, 12.0], [0.0, 3.0], [-5.0, -2.0])
        with pytest.raises(DomainError):
            solutions.phi_functional(EX52.system, stretched, 1.0)


class TestSmallHelpers:
    def test_n_function(self):
        assert solutions.n_function(EX51.system, 0.0, -4.3) == 0.0
        assert solutions.n_function(EX51.system, 3.0, 0.0) == pytest.approx(-2.0)
        assert solutions.n_function(EX51.system, 3.0, -2.0) == pytest.approx(0.0, abs=1e-12)

    def test_lambda_form_on_passing_curves(self):
        for spec, name in ((EX51, "arclength"), (EX52, "arclength_1"), (EX52, "arclength_2")):
            assert solutions.lambda_form_check(spec.system, spec.reference[name])["passed"], (spec.id, name)

    def test_thread_count_env(self, monkeypatch):
        monkeypatch.setenv("RIPSOLVE_THREADS", "3")
        assert solutions.thread_count() == 3
        assert solutions.thread_count(1) == 1

    def test_sweep_tolerance(self):
        assert solutions.sweep_tolerance(1e-3, 1e-4) == pytest.approx(10 * (1e-3 + 1e-2))

    def test_sweep_rejects_increasing_eps(self):
        with pytest.raises(DomainError):
            solutions.vanishing_viscosity(EX52.system, EX52.q0, eps_sequence=(1e-3, 1e-2))


class TestSweeps:
    def test_non_jumping_selection(self):
        spec, res = sweep("ex52")
        curve, bv, diag = res
        assert diag["converged"]
        assert bv.jump_times.size == 0
        tol = 10 * SWEEP_EPS[-1]
        ref = spec.reference["bv_q2"]
        for t in (1.0, 4.0, 6.0, 8.0):
            assert float(bv(t)[0]) == pytest.approx(float(ref(t)[0]), abs=tol)
        assert diag["validation"]["bv"] and diag["validation"]["parametrized"]

    def test_monotone_loading_jump(self):
        spec, res = sweep("ex51")
        tol = 10 * SWEEP_EPS[-1] + 10 * SWEEP_TAU
        assert res.bv.jump_times.size == 1
        assert abs(res.bv.jump_times[0] - 3.0) <= tol
        assert res.diagnostics["validation"]["bv"]

    def test_sweep_outputs_are_consistent(self):
        _, res = sweep("ex52")
        assert len(res.runs) == len(SWEEP_EPS)
        assert res.diagnostics["eps"] == list(SWEEP_EPS)
        assert all(r <= 0.5 for r in res.diagnostics["ratios"])

"""Hierarchy driver: cap selection, sweeps, verdicts, saddle recovery."""

import numpy as np
import pytest

from convexsos import (
    HierarchyConfig,
    LevelTooSmall,
    NoFeasiblePoint,
    Polynomial,
    Problem,
    build_program,
    certify_finite_convergence,
    choose_c,
    compare_modes,
    find_saddle_point,
    run_hierarchy,
    solve_program,
    verify_certificate,
    verify_saddle,
)
from convexsos.problem import SaddlePoint
from conftest import load_corpus

x1 = Polynomial.variable(1, 0)
x, y = Polynomial.variables(2)


class TestChooseC:
    def test_margin_formula(self):
        problem = load_corpus("ex32")
        problem.cap = None  # ignore the stored value; x0 = 0 and f(0) = 0
        assert choose_c(problem) == 1

    def test_passthrough(self):
        problem = load_corpus("ex32")
        assert choose_c(problem, HierarchyConfig(cap=5)) == 5

    def test_infeasible_point_rejected(self):
        problem = Problem(
            objective=x1,
            constraints=(x1 * x1 - 1,),
            feasible_point=(1.5,),  # g(1.5) = 1.25 > 0
        )
        with pytest.raises(NoFeasiblePoint):
            choose_c(problem)

    def test_nothing_supplied(self):
        problem = Problem(objective=x1, constraints=(x1 * x1 - 1,))
        with pytest.raises(NoFeasiblePoint):
            choose_c(problem)

    def test_cap_must_exceed_value(self):
        problem = load_corpus("ex32")
        with pytest.raises(NoFeasiblePoint):
            choose_c(problem, HierarchyConfig(cap=-1))  # f(0) = 0 >= -1


class TestRunHierarchy:
    def test_interval_certified(self, solved_corpus):
        problem, result = solved_corpus["ex32"]
        assert result.verdict == "finite_convergence_certified"
        assert result.certified_level == 1
        for lv in result.levels:
            assert lv.bound == pytest.approx(-1.0, abs=1e-6)
        assert "early_stop" in result.diagnostics
        saddle = result.saddle_search.saddle
        assert saddle.multipliers[0] == pytest.approx(0.5, abs=1e-4)

    def test_noncompact_certified(self, solved_corpus):
        problem, result = solved_corpus["ex-noncompact"]
        # oracle: grid search over [0, 10] x [-10, 10]
        f = problem.objective.as_float()
        grid_x = np.arange(0, 10.0001, 0.05)
        grid_y = np.arange(-10, 10.0001, 0.05)
        oracle = min(float(f.eval([a, b])) for a in grid_x for b in grid_y)
        assert oracle == pytest.approx(-0.25, abs=1e-12)
        assert result.verdict == "finite_convergence_certified"
        assert result.certified_level <= 2
        assert result.best_bound == pytest.approx(oracle, abs=1e-6)

    def test_point_feasible_asymptotic_only(self, solved_corpus):
        problem, result = solved_corpus["ex33"]
        assert result.verdict == "asymptotic_only"
        assert all(lv.bound < 0 for lv in result.levels)
        assert result.saddle_search.saddle is None

    def test_singular_hessian_withheld(self, solved_corpus):
        problem, result = solved_corpus["ex31-pattern"]
        assert result.verdict == "inconclusive"
        assert result.saddle_search.saddle is not None
        assert result.certify is not None
        assert result.certify.reason == "Hessian not PD"

    def test_level_too_small(self):
        problem = load_corpus("ex31-pattern")
        with pytest.raises(LevelTooSmall):
            run_hierarchy(problem, HierarchyConfig(k_min=1, k_max=1))

    def test_backend_failures_do_not_abort(self, backend):
        # f unbounded below: every level is weakly infeasible, so the backend
        # fails per level without aborting the sweep
        problem = Problem(objective=x1, feasible_point=(0.0,))
        result = run_hierarchy(
            problem, HierarchyConfig(k_min=1, k_max=2, attach_structure=False), backend
        )
        assert len(result.levels) == 2
        assert not any(lv.verified for lv in result.levels)
        assert result.verdict == "inconclusive"

    def test_sharp_mode_interval(self, backend):
        problem = load_corpus("ex32")
        config = HierarchyConfig(
            mode="sharp", multipliers=(0.5,), k_min=1, k_max=2, attach_structure=False
        )
        result = run_hierarchy(problem, config, backend)
        assert result.levels[0].bound == pytest.approx(-1.0, abs=1e-6)
        assert result.levels[0].verified

    def test_dropped_generator_diagnostics(self, backend):
        problem = Problem(
            objective=x1 * x1 + x1,
            constraints=(x1**4 - 1,),
            feasible_point=(0.0,),
        )
        result = run_hierarchy(
            problem, HierarchyConfig(k_min=1, k_max=2, attach_structure=False), backend
        )
        dropped = result.diagnostics.get("dropped_generators", {})
        assert "1" in dropped

    def test_structure_attached_and_conditional_flag(self, backend):
        # non-convex objective: bounds are still valid, claims conditional
        problem = Problem(
            objective=(x1**3 + x1 * x1).as_float(),
            constraints=(x1 * x1 - 1,),
            feasible_point=(0.0,),
        )
        result = run_hierarchy(problem, HierarchyConfig(k_min=2, k_max=2), backend)
        structure = result.diagnostics["structure"]
        assert not structure["all_convex"]
        assert result.diagnostics.get("convexity_conditional", False) or result.verdict in (
            "inconclusive",
            "asymptotic_only",
            "finite_convergence_certified",
        )


class TestFindSaddlePoint:
    def test_interval_multiplier(self, backend):
        problem = load_corpus("ex32")
        cert = solve_program(build_program(problem, 1, c=1, mode="extended"), backend)
        search = find_saddle_point(problem, cert, x_guess=(-1.0,))
        assert search.saddle is not None
        assert search.saddle.multipliers[0] == pytest.approx(0.5, abs=1e-4)
        # d^2/dx^2 (x + lambda (x^2 - 1)) = 2 lambda = 1
        assert search.saddle.hessian_min_eigenvalue == pytest.approx(1.0, abs=1e-4)

    def test_point_feasible_has_no_saddle(self, backend):
        problem = load_corpus("ex33")
        cert = solve_program(build_program(problem, 1, c=1, mode="extended"), backend)
        search = find_saddle_point(problem, cert, x_guess=(0.0, 0.0))
        assert search.saddle is None
        assert search.residuals["stationarity"] >= 1.0

    def test_degenerate_hessian_reported(self, backend):
        problem = load_corpus("ex31-pattern")
        cert = solve_program(build_program(problem, 2, c=1, mode="extended"), backend)
        search = find_saddle_point(problem, cert, x_guess=(0.0, 0.0))
        assert search.saddle is not None
        assert abs(search.saddle.hessian_min_eigenvalue) <= 1e-6
        outcome = certify_finite_convergence(search.saddle)
        assert not outcome.certified
        assert outcome.reason == "Hessian not PD"

    def test_descent_finds_minimizer_without_guess(self, backend):
        problem = load_corpus("ex-noncompact")
        cert = solve_program(build_program(problem, 1, c=1, mode="extended"), backend)
        search = find_saddle_point(problem, cert, start=problem.feasible_point)
        assert search.saddle is not None
        assert np.allclose(search.saddle.point, [0.0, -0.5], atol=1e-6)


class TestCertify:
    def test_no_saddle_reason(self):
        outcome = certify_finite_convergence(None)
        assert not outcome.certified
        assert outcome.reason == "no saddle point"

    def test_positive_definite_certifies(self):
        saddle = SaddlePoint((0.0,), (1.0,), 0.0, hessian_min_eigenvalue=2.0)
        assert certify_finite_convergence(saddle).certified


class TestCompareModes:
    def test_interval_modes_agree(self, backend):
        problem = load_corpus("ex32")
        table = compare_modes(problem, HierarchyConfig(k_min=1, k_max=2), backend)
        for row in table.rows:
            assert row.extended_bound == pytest.approx(row.standard_bound, abs=1e-6)
            assert row.extended_bound == pytest.approx(-1.0, abs=1e-6)

    def test_unconstrained_square(self, backend):
        problem = load_corpus("ex-unconstrained")
        table = compare_modes(problem, HierarchyConfig(k_min=1, k_max=1), backend)
        assert table.rows[0].standard_bound == pytest.approx(0.0, abs=1e-6)
        assert table.rows[0].extended_bound == pytest.approx(0.0, abs=1e-6)

    def test_noncompact_dominance(self, backend):
        problem = load_corpus("ex-noncompact")
        table = compare_modes(problem, HierarchyConfig(k_min=1, k_max=2), backend)
        for row in table.rows:
            assert row.extended_bound >= row.standard_bound - 1e-7

    def test_flag_logic(self):
        from convexsos.hierarchy import ModeComparisonRow

        row = ModeComparisonRow(
            level=1,
            standard_bound=float("-inf"),
            extended_bound=-1.0,
            gap=float("nan"),
            standard_infeasible_extended_feasible=True,
        )
        data = row.to_json_dict()
        assert data["standard_bound"] == "-inf"
        assert data["gap"] is None
        assert data["standard_infeasible_extended_feasible"]


class TestInvariants:
    def test_sandwich(self, solved_corpus, backend):
        # every verified bound sits below the objective at feasible samples
        rng = np.random.default_rng(0)
        for name in ("ex32", "ex-noncompact", "ex-unconstrained"):
            problem, result = solved_corpus[name]
            f = problem.objective.as_float()
            samples = []
            for _ in range(200):
                pt = rng.uniform(-3, 3, size=problem.n)
                if problem.is_feasible(pt.tolist()):
                    samples.append(pt)
            assert samples
            for lv in result.levels:
                if lv.verified:
                    for pt in samples:
                        assert lv.bound <= float(f.eval(pt.tolist())) + 1e-6

    def test_scale_robustness(self, backend):
        base = load_corpus("ex32")
        scaled = Problem(
            objective=base.objective.scale(2),
            constraints=tuple(g.scale(2) for g in base.constraints),
            feasible_point=base.feasible_point,
        )
        result_base = run_hierarchy(base, HierarchyConfig(k_min=1, k_max=2), backend)
        result_scaled = run_hierarchy(scaled, HierarchyConfig(k_min=1, k_max=2), backend)
        assert result_scaled.verdict == result_base.verdict == "finite_convergence_certified"
        assert result_scaled.best_bound == pytest.approx(
            2 * result_base.best_bound, rel=1e-6
        )

    def test_early_stop_soundness(self, solved_corpus):
        # a certified verdict implies the attaining certificate re-verifies
        for name in ("ex32", "ex-noncompact", "ex-unconstrained"):
            problem, result = solved_corpus[name]
            assert result.verdict == "finite_convergence_certified"
            cert = result.final_certificate()
            report = verify_certificate(problem, cert)
            assert report.verified
            assert report.residual_inf_norm <= 1e-6

    def test_necessity_roundtrip(self, solved_corpus):
        # certified verdict -> recovered multipliers satisfy the saddle checks
        for name in ("ex32", "ex-noncompact", "ex-unconstrained"):
            problem, result = solved_corpus[name]
            saddle = result.saddle_search.saddle
            report = verify_saddle(problem, saddle, kkt_tol=1e-5)
            assert report.verified, (name, report.detail)

    def test_monotone_bounds_within_run(self, solved_corpus):
        for name, (problem, result) in solved_corpus.items():
            finite = [lv.bound for lv in result.levels if lv.bound > float("-inf")]
            for lo, hi in zip(finite, finite[1:]):
                assert lo <= hi + 1e-7


class TestSharpWorkflow:
    def test_extended_multipliers_feed_sharp_mode(self, solved_corpus, backend):
        # recover multipliers from the extended run, then re-solve with them
        # pinned; the sharp bound matches at the certified level
        problem, result = solved_corpus["ex-noncompact"]
        lambdas = result.saddle_search.saddle.multipliers
        cert = solve_program(
            build_program(problem, 1, c=result.cap, mode="sharp", multipliers=lambdas),
            backend,
        )
        assert cert.mu_star == pytest.approx(result.best_bound, abs=1e-6)
        assert verify_certificate(problem, cert, c=result.cap).verified


class TestMultiplierPolish:
    def test_active_constraint_instance_certifies(self, backend):
        # strictly convex quadratic with the constraint active at the
        # optimum: x* = (1/4, 0), lambda* = 5/4, f* = -1/8
        problem = Problem(
            objective=(2 * x * x + y * y + x * y - x + y).as_float(),
            constraints=((-y).as_float(),),
            feasible_point=(0.0, 0.0),
        )
        result = run_hierarchy(problem, HierarchyConfig(k_min=1, k_max=2), backend)
        assert result.verdict == "finite_convergence_certified"
        assert result.best_bound == pytest.approx(-0.125, abs=1e-6)
        saddle = result.saddle_search.saddle
        assert np.allclose(saddle.point, [0.25, 0.0], atol=1e-5)
        assert saddle.multipliers[0] == pytest.approx(1.25, abs=1e-6)

    def test_polish_guard_keeps_disagreeing_values(self):
        from convexsos.hierarchy import _polish_multipliers

        problem = load_corpus("ex32")
        # decoded value far from the least-squares fit: guard keeps it
        kept = _polish_multipliers(problem, [-1.0], [0.9])
        assert kept == [0.9]
        # decoded value close to the fit: polished to the exact solution
        polished = _polish_multipliers(problem, [-1.0], [0.5004])
        assert polished[0] == pytest.approx(0.5, abs=1e-12)

    def test_polish_ignores_inactive_constraints(self):
        from convexsos.hierarchy import _polish_multipliers

        problem = load_corpus("ex31-pattern")  # g(0,0) = -1, inactive
        assert _polish_multipliers(problem, [0.0, 0.0], [0.0]) == [0.0]

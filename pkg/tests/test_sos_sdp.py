"""Program assembly, backend solves, and Gram decoding."""

import numpy as np
import pytest

from convexsos import (
    LevelTooSmall,
    NegativeMultiplier,
    NotPsd,
    Polynomial,
    Problem,
    build_program,
    gram_to_sos,
    monomial_basis,
    solve_program,
)
from convexsos.sos_sdp import (
    BASE_LABEL,
    CAP_LABEL,
    Certificate,
    constraint_label,
    gram_polynomial,
    program_residual,
)
from conftest import load_corpus

x1 = Polynomial.variable(1, 0)
x, y = Polynomial.variables(2)


class TestBuildProgram:
    def test_interval_level_one_structure(self):
        problem = load_corpus("ex32")
        program = build_program(problem, 1, c=1, mode="extended")
        labels = {blk.label: blk for blk in program.blocks}
        assert set(labels) == {BASE_LABEL, constraint_label(0), CAP_LABEL}
        assert labels[BASE_LABEL].basis == ((0,), (1,))
        assert labels[constraint_label(0)].basis == ((0,),)
        assert labels[CAP_LABEL].basis == ((0,),)
        # one equality row per monomial of degree <= 2: 1, x, x^2
        assert [row.monomial for row in program.equalities] == [(0,), (1,), (2,)]

    def test_standard_mode_omits_cap(self):
        problem = load_corpus("ex32")
        program = build_program(problem, 1, mode="standard")
        assert {blk.label for blk in program.blocks} == {BASE_LABEL, constraint_label(0)}

    def test_cap_block_degree(self):
        # deg f = 2 means the cap multiplier basis has degree k - 1
        problem = load_corpus("ex33")
        for k in (1, 2, 3):
            program = build_program(problem, k, c=1, mode="extended")
            retained = dict(program.module.retained)
            assert retained[CAP_LABEL] == k - 1
            assert retained[BASE_LABEL] == k

    def test_level_too_small(self):
        problem = load_corpus("ex31-pattern")  # quartic objective
        with pytest.raises(LevelTooSmall):
            build_program(problem, 1, c=1)

    def test_dropped_generator_recorded(self):
        quartic_constraint = Problem(
            objective=x1 * x1,
            constraints=(x1**4 - 1,),
            feasible_point=(0,),
        )
        program = build_program(quartic_constraint, 1, c=2, mode="extended")
        assert program.module.dropped == ((constraint_label(0), 4),)
        assert constraint_label(0) not in {blk.label for blk in program.blocks}

    def test_sharp_mode_structure(self):
        problem = load_corpus("ex32")
        program = build_program(problem, 1, c=1, mode="sharp", multipliers=(0.5,))
        assert {blk.label for blk in program.blocks} == {BASE_LABEL, CAP_LABEL}
        assert program.fixed_multipliers == (0.5,)

    def test_sharp_mode_rejects_negative(self):
        problem = load_corpus("ex32")
        with pytest.raises(NegativeMultiplier):
            build_program(problem, 1, c=1, mode="sharp", multipliers=(-0.5,))

    def test_deterministic_serialization(self):
        problem = load_corpus("ex-noncompact")
        first = build_program(problem, 2, c=1, mode="extended").to_json()
        second = build_program(problem, 2, c=1, mode="extended").to_json()
        assert first == second

    def test_monomial_basis_graded_lex(self):
        assert monomial_basis(2, 2) == ((0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0))


class TestSolveProgram:
    def test_interval_bound(self, backend):
        problem = load_corpus("ex32")
        cert = solve_program(build_program(problem, 1, c=1, mode="extended"), backend)
        assert cert.backend_status == "optimal"
        assert cert.mu_star == pytest.approx(-1.0, abs=1e-6)

    def test_unconstrained_square(self, backend):
        problem = Problem(objective=x1 * x1, feasible_point=(0,))
        cert = solve_program(build_program(problem, 1, mode="standard"), backend)
        assert cert.mu_star == pytest.approx(0.0, abs=1e-7)

    def test_point_feasible_bounds_negative(self, backend):
        problem = load_corpus("ex33")
        for k in (1, 2, 3):
            cert = solve_program(build_program(problem, k, c=1, mode="extended"), backend)
            assert cert.mu_star < 0

    def test_infeasible_reports_minus_infinity(self, backend):
        # -x^2 - mu is never SOS and the violation is bounded away from zero,
        # so the solver can certify infeasibility
        problem = Problem(objective=-(x1 * x1), feasible_point=(0,))
        cert = solve_program(build_program(problem, 1, mode="standard"), backend)
        assert cert.backend_status == "infeasible"
        assert cert.mu_star == float("-inf")
        assert not cert.grams

    def test_weakly_infeasible_surfaces_as_failure(self, backend):
        # x - mu is never SOS either, but only weakly (no dual certificate);
        # the backend cannot decide and the failure is propagated
        from convexsos import BackendFailure

        problem = Problem(objective=x1, feasible_point=(0,))
        program = build_program(problem, 1, mode="standard")
        try:
            cert = solve_program(program, backend)
        except BackendFailure:
            return
        assert cert.backend_status in ("infeasible", "inaccurate")

    def test_sharp_mode_interval(self, backend):
        problem = load_corpus("ex32")
        program = build_program(problem, 1, c=1, mode="sharp", multipliers=(0.5,))
        cert = solve_program(program, backend)
        assert cert.mu_star == pytest.approx(-1.0, abs=1e-6)
        assert cert.fixed_multipliers == (0.5,)

    def test_revalidation_residual(self, backend):
        problem = load_corpus("ex-noncompact")
        program = build_program(problem, 1, c=1, mode="extended")
        cert = solve_program(program, backend)
        assert cert.backend_status == "optimal"
        assert program_residual(program, cert.grams, cert.mu_star) <= 1e-7

    def test_reconstruction_master_property(self, backend):
        # expand all blocks against their generators and compare with f - mu
        problem = load_corpus("ex-noncompact")
        cert = solve_program(build_program(problem, 2, c=1, mode="extended"), backend)
        f = problem.objective.as_float()
        expansion = Polynomial.constant(2, cert.mu_star) - f
        expansion = expansion + gram_polynomial(cert.grams[BASE_LABEL], cert.bases[BASE_LABEL])
        expansion = expansion - gram_polynomial(
            cert.grams[constraint_label(0)], cert.bases[constraint_label(0)]
        ) * problem.constraints[0].as_float()
        cap_poly = Polynomial.constant(2, 1.0) - f
        expansion = expansion + gram_polynomial(cert.grams[CAP_LABEL], cert.bases[CAP_LABEL]) * cap_poly
        assert expansion.max_abs_coefficient() <= 1e-6 * (1 + f.max_abs_coefficient())

    def test_monotone_and_dominant(self, backend):
        problem = load_corpus("ex-noncompact")
        bounds = {}
        for mode in ("standard", "extended"):
            for k in (1, 2):
                cert = solve_program(build_program(problem, k, c=1, mode=mode), backend)
                bounds[(mode, k)] = cert.mu_star
        assert bounds[("extended", 1)] <= bounds[("extended", 2)] + 1e-7
        assert bounds[("standard", 1)] <= bounds[("standard", 2)] + 1e-7
        for k in (1, 2):
            assert bounds[("extended", k)] >= bounds[("standard", k)] - 1e-7

    def test_claimed_bound_feasibility(self, backend):
        # pinning the bound at the true optimum stays representable here
        problem = load_corpus("ex32")
        program = build_program(problem, 1, c=1, claimed_bound=-1.0)
        assert not program.maximize_mu
        cert = solve_program(program, backend)
        assert cert.backend_status == "optimal"


class TestGramDecoding:
    def test_rank_one_square(self):
        squares = gram_to_sos(np.array([[1.0, 1.0], [1.0, 1.0]]), ((0,), (1,)))
        assert len(squares) == 1
        # eigenvalue 2 on (1,1)/sqrt2 gives the factor 1 + x
        assert (squares[0] - (1 + x1).as_float()).max_abs_coefficient() < 1e-12

    def test_identity_gram(self):
        squares = gram_to_sos(np.eye(2), ((0,), (1,)))
        total = Polynomial.zero(1)
        for s in squares:
            total = total + s * s
        assert (total - (1 + x1 * x1).as_float()).max_abs_coefficient() < 1e-12

    def test_solved_interval_multiplier(self, backend):
        # the free block of the solved interval certificate is (x+1)^2 / 2
        problem = load_corpus("ex32")
        cert = solve_program(build_program(problem, 1, c=1, mode="extended"), backend)
        squares = gram_to_sos(cert.grams[BASE_LABEL], cert.bases[BASE_LABEL])
        total = Polynomial.zero(1)
        for s in squares:
            total = total + s * s
        expected = (0.5 * (x1 + 1) ** 2).as_float()
        assert (total - expected).max_abs_coefficient() < 1e-6

    def test_sum_reproduces_gram_polynomial(self):
        rng = np.random.default_rng(0)
        basis = monomial_basis(2, 2)
        root = rng.normal(size=(len(basis), len(basis)))
        gram = root @ root.T
        squares = gram_to_sos(gram, basis)
        total = Polynomial.zero(2)
        for s in squares:
            total = total + s * s
        assert (total - gram_polynomial(gram, basis)).max_abs_coefficient() < 1e-7

    def test_not_psd_raises(self):
        with pytest.raises(NotPsd):
            gram_to_sos(np.array([[-1.0]]), ((0,),))


class TestCertificateSerialization:
    def test_roundtrip(self, backend, tmp_path):
        problem = load_corpus("ex32")
        cert = solve_program(build_program(problem, 1, c=1, mode="extended"), backend)
        path = tmp_path / "cert.json"
        cert.dump(path)
        restored = Certificate.load(path)
        assert restored.mu_star == cert.mu_star
        assert restored.level == cert.level
        assert set(restored.grams) == set(cert.grams)
        for label in cert.grams:
            assert np.array_equal(restored.grams[label], cert.grams[label])
            assert restored.bases[label] == cert.bases[label]

    def test_minus_infinity_roundtrip(self, tmp_path, backend):
        problem = Problem(objective=-(x1 * x1), feasible_point=(0,))
        cert = solve_program(build_program(problem, 1, mode="standard"), backend)
        path = tmp_path / "cert.json"
        cert.dump(path)
        assert Certificate.load(path).mu_star == float("-inf")


class TestBackendContract:
    def test_capability_guard(self):
        from convexsos import BackendFailure
        from convexsos.backends import BackendCapability, SdpBackend

        class TinyBackend(SdpBackend):
            name = "tiny"

            def capability(self):
                return BackendCapability(name="tiny", max_block_size=1)

            def solve(self, program):  # pragma: no cover - guard fires first
                raise AssertionError("should not be reached")

        problem = load_corpus("ex32")
        program = build_program(problem, 1, c=1, mode="extended")
        with pytest.raises(BackendFailure):
            solve_program(program, TinyBackend())

"""Level-by-level driver for the capped sum-of-squares relaxation hierarchy.

For a problem ``min f s.t. g_i <= 0`` and a cap value ``c`` above some
feasible objective value, level ``k`` maximizes ``mu`` subject to membership
of ``f - mu`` in the degree-``2k`` truncation of the module generated by the
constraints and ``c - f``.  Bounds are monotone in ``k`` and converge to the
optimum for convex inputs; they converge at a *finite* level exactly when
the Lagrangian has a saddle point, and positive definiteness of the
Lagrangian Hessian there upgrades observed convergence to a certified one.

The driver distinguishes three verdicts:

* ``finite_convergence_certified``: a verified certificate whose bound
  matches a verified saddle point's objective value, with the Lagrangian
  Hessian positive definite there;
* ``asymptotic_only``: the saddle-point construction fails at a converged
  minimizer estimate, which rules out finite convergence (the multipliers
  recovered from any exactly-optimal certificate would have to satisfy the
  KKT conditions);
* ``inconclusive``: anything else, with the missing ingredient reported.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .convex_analysis import analyze_polynomial, hessian_pd_tolerance
from .poly import Scalar
from .problem import Problem, SaddlePoint
from .sos_sdp import (
    BackendFailure,
    Certificate,
    LevelTooSmall,
    build_program,
    constraint_label,
    solve_program,
)
from .verify import VerificationReport, verify_certificate, verify_saddle

if TYPE_CHECKING:  # pragma: no cover
    from .backends import SdpBackend

FEAS_TOL = 1e-7
KKT_TOL = 1e-5


class NoFeasiblePoint(ValueError):
    """Neither a cap value nor a feasible point is available."""


@dataclass
class HierarchyConfig:
    feasible_point: tuple[Scalar, ...] | None = None
    cap: Scalar | None = None
    k_min: int | None = None
    k_max: int | None = None
    tol_gap: float = 1e-6
    mode: str = "extended"  # extended | standard | sharp
    multipliers: tuple[float, ...] | None = None  # sharp mode only
    kkt_tol: float = KKT_TOL
    attach_structure: bool = True
    early_stop: bool = True
    seed: int = 0


def choose_c(problem: Problem, config: HierarchyConfig | None = None, feas_tol: float = FEAS_TOL) -> Scalar:
    """Pick the cap value: an explicit one, else f(x0) + max(1, |f(x0)|).

    Any value strictly above some feasible objective value works; the
    scale-aware margin keeps the cap away from f(x0) without ballooning the
    multiplier block.  Raises NoFeasiblePoint when nothing usable exists.
    """
    config = config or HierarchyConfig()
    cap = config.cap if config.cap is not None else problem.cap
    point = config.feasible_point if config.feasible_point is not None else problem.feasible_point
    if cap is not None:
        if point is not None:
            value = problem.objective.eval(point)
            if not cap > value:
                raise NoFeasiblePoint(
                    f"cap {float(cap)} is not above the feasible objective value {float(value)}"
                )
        return cap
    if point is None:
        raise NoFeasiblePoint("no cap value and no feasible point supplied")
    violation = problem.constraint_violation(point)
    if violation > feas_tol:
        raise NoFeasiblePoint(
            f"supplied point violates the constraints by {violation:.3e}"
        )
    value = problem.objective.eval(point)
    margin = max(1, abs(value)) if not isinstance(value, float) else max(1.0, abs(value))
    return value + margin


@dataclass
class LevelOutcome:
    level: int
    bound: float  # -inf when the level is infeasible
    status: str
    wall_time: float
    certificate: Certificate | None = None
    verified: bool | None = None
    verification: VerificationReport | None = None
    error: str = ""

    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "bound": "-inf" if self.bound == float("-inf") else self.bound,
            "status": self.status,
            "wall_time": self.wall_time,
            "verified": self.verified,
            "residual": None if self.verification is None else self.verification.residual_inf_norm,
            "error": self.error,
        }


@dataclass
class SaddleSearch:
    """Outcome of the saddle-point construction at a minimizer estimate."""

    saddle: SaddlePoint | None
    residuals: dict[str, float]
    minimizer_estimate: tuple[float, ...] | None
    estimate_converged: bool
    message: str = ""

    @property
    def max_violation(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def to_json_dict(self) -> dict:
        return {
            "saddle": None if self.saddle is None else self.saddle.to_json_dict(),
            "residuals": dict(self.residuals),
            "minimizer_estimate": None
            if self.minimizer_estimate is None
            else list(self.minimizer_estimate),
            "estimate_converged": self.estimate_converged,
            "message": self.message,
        }


@dataclass
class CertifyOutcome:
    certified: bool
    reason: str = ""
    min_eigenvalue: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "certified": self.certified,
            "reason": self.reason,
            "min_eigenvalue": self.min_eigenvalue,
        }


@dataclass
class HierarchyResult:
    levels: list[LevelOutcome]
    verdict: str
    certified_level: int | None
    cap: float | None
    mode: str
    saddle_search: SaddleSearch | None = None
    saddle_verification: VerificationReport | None = None
    certify: CertifyOutcome | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def best_bound(self) -> float:
        finite = [lv.bound for lv in self.levels if lv.bound > float("-inf")]
        return max(finite) if finite else float("-inf")

    def attaining_level(self, tol_gap: float = 1e-6) -> LevelOutcome | None:
        """First verified level whose bound matches the best verified bound.

        Multipliers decoded from a certificate drift with the dimension of
        the optimal face, so the earliest attaining level is the most
        reliable source for saddle recovery.
        """
        verified = [lv for lv in self.levels if lv.verified and lv.certificate is not None]
        if not verified:
            return None
        best = max(lv.bound for lv in verified)
        for outcome in verified:
            if outcome.bound >= best - tol_gap:
                return outcome
        return verified[-1]

    def final_certificate(self) -> Certificate | None:
        outcome = self.attaining_level()
        if outcome is not None:
            return outcome.certificate
        for outcome in reversed(self.levels):
            if outcome.certificate is not None and outcome.status in ("optimal", "inaccurate"):
                return outcome.certificate
        return None

    def to_json_dict(self) -> dict:
        return {
            "levels": [lv.to_json_dict() for lv in self.levels],
            "verdict": self.verdict,
            "certified_level": self.certified_level,
            "best_bound": "-inf" if self.best_bound == float("-inf") else self.best_bound,
            "cap": self.cap,
            "mode": self.mode,
            "saddle_search": None
            if self.saddle_search is None
            else self.saddle_search.to_json_dict(),
            "saddle_verification": None
            if self.saddle_verification is None
            else self.saddle_verification.to_json_dict(),
            "certify": None if self.certify is None else self.certify.to_json_dict(),
            "diagnostics": self.diagnostics,
        }


# ----------------------------------------------------------------------
# minimizer estimation
# ----------------------------------------------------------------------


def estimate_minimizer(
    problem: Problem,
    mu: float,
    start: Sequence[float] | None = None,
    iterations: int = 500,
) -> tuple[list[float], bool]:
    """Heuristic minimizer estimate; never part of any certificate.

    Runs a subgradient descent on max(f - mu, g_1, ..., g_m) (whose minimum
    value is ~0 exactly at constrained minimizers when mu is a tight lower
    bound), then polishes with a local constrained solve followed by a
    Newton refinement of the active-set KKT system.  Returns the point and
    whether the polish converged.
    """
    from scipy.optimize import minimize

    n = problem.n
    x = np.zeros(n) if start is None else np.asarray([float(v) for v in start], dtype=float)
    f = problem.objective.as_float()
    constraints = [g.as_float() for g in problem.constraints]

    def pieces(point):
        values = [float(f.eval(point.tolist())) - mu]
        values.extend(float(g.eval(point.tolist())) for g in constraints)
        return values

    best = x.copy()
    best_value = max(pieces(x))
    for t in range(1, iterations + 1):
        values = pieces(x)
        index = int(np.argmax(values))
        poly = f if index == 0 else constraints[index - 1]
        grad = np.asarray(poly.gradient_at(x.tolist()), dtype=float)
        norm = np.linalg.norm(grad)
        if norm < 1e-14:
            break
        x = x - (1.0 / t) * grad / max(norm, 1.0)
        value = max(pieces(x))
        if value < best_value:
            best_value = value
            best = x.copy()

    scipy_constraints = [
        {"type": "ineq", "fun": (lambda pt, gg=g: -float(gg.eval(pt.tolist())))}
        for g in constraints
    ]
    result = minimize(
        lambda pt: float(f.eval(pt.tolist())),
        best,
        jac=lambda pt: np.asarray(f.gradient_at(pt.tolist()), dtype=float),
        constraints=scipy_constraints,
        method="SLSQP",
        options={"maxiter": 200, "ftol": 1e-12},
    )
    point = result.x if result.success else best
    refined = _kkt_newton_refine(problem, np.asarray(point, dtype=float))
    return refined.tolist(), bool(result.success)


def _kkt_newton_refine(
    problem: Problem,
    x: np.ndarray,
    active_tol: float = 1e-4,
    iterations: int = 25,
) -> np.ndarray:
    """Newton iterations on the active-set KKT system to sharpen a nearly
    optimal point.  Keeps the input when refinement does not help."""
    f = problem.objective.as_float()
    active = [
        g.as_float()
        for g in problem.constraints
        if float(g.eval(x.tolist())) >= -active_tol
    ]
    m = len(active)

    def kkt_residual(point, nu):
        grad = np.asarray(f.gradient_at(point.tolist()), dtype=float)
        for lam, g in zip(nu, active):
            grad += lam * np.asarray(g.gradient_at(point.tolist()), dtype=float)
        cons = np.asarray([float(g.eval(point.tolist())) for g in active])
        return np.concatenate([grad, cons])

    # Initial multipliers by least squares on stationarity.
    if m:
        jac = np.column_stack(
            [np.asarray(g.gradient_at(x.tolist()), dtype=float) for g in active]
        )
        nu, *_ = np.linalg.lstsq(jac, -np.asarray(f.gradient_at(x.tolist()), dtype=float), rcond=None)
        nu = np.maximum(nu, 0.0)
    else:
        nu = np.zeros(0)

    best_x = x.copy()
    best_norm = np.linalg.norm(kkt_residual(x, nu), ord=np.inf)
    cur_x, cur_nu = x.copy(), nu.copy()
    for _ in range(iterations):
        residual = kkt_residual(cur_x, cur_nu)
        norm = np.linalg.norm(residual, ord=np.inf)
        if norm < best_norm:
            best_norm = norm
            best_x = cur_x.copy()
        if norm < 1e-13:
            break
        hessian = np.asarray(
            [[float(v) for v in row] for row in f.hessian_at(cur_x.tolist())], dtype=float
        )
        for lam, g in zip(cur_nu, active):
            hessian += lam * np.asarray(
                [[float(v) for v in row] for row in g.hessian_at(cur_x.tolist())], dtype=float
            )
        if m:
            jac = np.column_stack(
                [np.asarray(g.gradient_at(cur_x.tolist()), dtype=float) for g in active]
            )
            top = np.hstack([hessian, jac])
            bottom = np.hstack([jac.T, np.zeros((m, m))])
            system = np.vstack([top, bottom])
        else:
            system = hessian
        try:
            step, *_ = np.linalg.lstsq(system, -residual, rcond=None)
        except np.linalg.LinAlgError:
            break
        cur_x = cur_x + step[: len(cur_x)]
        if m:
            cur_nu = cur_nu + step[len(cur_x):]
    residual = kkt_residual(cur_x, cur_nu)
    if np.linalg.norm(residual, ord=np.inf) < best_norm:
        best_x = cur_x
    return best_x


def find_saddle_point(
    problem: Problem,
    certificate: Certificate,
    x_guess: Sequence[float] | None = None,
    kkt_tol: float = KKT_TOL,
    start: Sequence[float] | None = None,
) -> SaddleSearch:
    """Recover a Lagrangian saddle point from a certificate.

    The multiplier for constraint i is the certificate's decoded SOS
    multiplier evaluated at the minimizer estimate (zero when the constraint
    carried no block at this level); at an exactly-optimal certificate these
    values are forced to satisfy the KKT system.  Because solvers stop at a
    positive duality gap, the decoded values wander by roughly the square
    root of that gap along the optimal face, so they are polished by an
    active-set nonnegative least-squares fit of the stationarity system,
    accepted only when it agrees with the decoded values.  Absence of a
    saddle point is reported through the residuals, never as an error.
    """
    if x_guess is not None:
        x = [float(v) for v in x_guess]
        converged = True
    else:
        x, converged = estimate_minimizer(problem, float(certificate.mu_star), start=start)

    if certificate.fixed_multipliers is not None:
        lambdas = [float(v) for v in certificate.fixed_multipliers]
    else:
        lambdas = [
            certificate.multiplier_value(constraint_label(i), x) for i in range(problem.m)
        ]
        lambdas = _polish_multipliers(problem, x, lambdas)

    lagrangian = problem.lagrangian(lambdas).as_float()
    grad = lagrangian.gradient_at(x)
    hessian = np.asarray(
        [[float(v) for v in row] for row in lagrangian.hessian_at(x)], dtype=float
    )
    min_eig = float(np.linalg.eigvalsh(hessian).min()) if hessian.size else 0.0

    residuals = {
        "stationarity": max((abs(float(v)) for v in grad), default=0.0),
        "feasibility": max(
            (max(float(g.eval(x)), 0.0) for g in problem.constraints), default=0.0
        ),
        "complementarity": max(
            (abs(lam * float(g.eval(x))) for lam, g in zip(lambdas, problem.constraints)),
            default=0.0,
        ),
        "multiplier_sign": max((max(-lam, 0.0) for lam in lambdas), default=0.0),
    }
    worst = max(residuals.values())
    if worst <= kkt_tol:
        saddle = SaddlePoint(
            point=tuple(x),
            multipliers=tuple(lambdas),
            lagrangian_value=float(lagrangian.eval(x)),
            hessian_min_eigenvalue=min_eig,
        )
        return SaddleSearch(saddle, residuals, tuple(x), converged)
    return SaddleSearch(
        None,
        residuals,
        tuple(x),
        converged,
        message=f"KKT violation {worst:.3e} exceeds {kkt_tol:.1e}",
    )


def _polish_multipliers(
    problem: Problem,
    x: Sequence[float],
    decoded: list[float],
    active_tol: float = 1e-4,
    agreement_tol: float = 1e-3,
) -> list[float]:
    """Nonnegative least-squares fit of stationarity over the active set.

    Returns the fit only when it agrees with the decoded multipliers within
    ``agreement_tol`` (scaled); otherwise the decoded values stand and any
    KKT violation surfaces unchanged.
    """
    from scipy.optimize import nnls

    active = [
        i
        for i, g in enumerate(problem.constraints)
        if float(g.eval(list(x))) >= -active_tol
    ]
    if not active:
        return decoded
    columns = np.column_stack(
        [
            np.asarray(problem.constraints[i].as_float().gradient_at(list(x)), dtype=float)
            for i in active
        ]
    )
    target = -np.asarray(problem.objective.as_float().gradient_at(list(x)), dtype=float)
    try:
        fitted, _ = nnls(columns, target)
    except Exception:
        return decoded
    polished = list(decoded)
    scale = agreement_tol * (1.0 + max(abs(v) for v in decoded))
    for idx, value in zip(active, fitted):
        if abs(value - decoded[idx]) > scale:
            return decoded
        polished[idx] = float(value)
    return polished


def certify_finite_convergence(saddle: SaddlePoint | None, hessian: np.ndarray | None = None) -> CertifyOutcome:
    """Certified iff the Lagrangian Hessian at the saddle point is positive
    definite (scale-aware threshold)."""
    if saddle is None:
        return CertifyOutcome(False, reason="no saddle point")
    if hessian is not None:
        threshold = hessian_pd_tolerance(np.asarray(hessian, dtype=float))
    else:
        threshold = 1e-8 * (1.0 + abs(saddle.hessian_min_eigenvalue))
    if saddle.hessian_min_eigenvalue > threshold:
        return CertifyOutcome(True, min_eigenvalue=saddle.hessian_min_eigenvalue)
    return CertifyOutcome(
        False,
        reason="Hessian not PD",
        min_eigenvalue=saddle.hessian_min_eigenvalue,
    )


# ----------------------------------------------------------------------
# the driver
# ----------------------------------------------------------------------


def default_k_min(problem: Problem) -> int:
    return max(1, (problem.objective.degree() + 1) // 2)


def run_hierarchy(
    problem: Problem,
    config: HierarchyConfig | None = None,
    backend: "SdpBackend | None" = None,
) -> HierarchyResult:
    """Sweep relaxation levels, verify certificates, and classify convergence.

    Levels stop early once two consecutive verified levels agree within
    ``tol_gap``.  Backend failures mark single levels as failed without
    aborting the sweep.
    """
    config = config or HierarchyConfig()
    if backend is None:
        from .backends import default_backend

        backend = default_backend()

    diagnostics: dict = {}
    structure = _attach_structure(problem, config, backend, diagnostics)

    cap = None
    if config.mode in ("extended", "sharp"):
        cap = choose_c(problem, config)
    diagnostics["cap"] = None if cap is None else float(cap)

    k_min = config.k_min if config.k_min is not None else default_k_min(problem)
    if 2 * k_min < problem.objective.degree():
        raise LevelTooSmall(
            f"k_min={k_min} too small for objective degree {problem.objective.degree()}"
        )
    k_max = config.k_max if config.k_max is not None else k_min + 3

    levels: list[LevelOutcome] = []
    dropped_by_level = {}
    prev: LevelOutcome | None = None
    for k in range(k_min, k_max + 1):
        outcome = _solve_level(problem, k, cap, config, backend)
        if outcome.certificate is not None and outcome.certificate.mode != "standard":
            module_dropped = _dropped_at(problem, k)
            if module_dropped:
                dropped_by_level[k] = module_dropped
        levels.append(outcome)
        if (
            config.early_stop
            and prev is not None
            and prev.verified
            and outcome.verified
            and abs(outcome.bound - prev.bound) <= config.tol_gap
        ):
            diagnostics["early_stop"] = {
                "level": k,
                "gap": abs(outcome.bound - prev.bound),
            }
            break
        prev = outcome
    if dropped_by_level:
        diagnostics["dropped_generators"] = {
            str(k): [list(item) for item in v] for k, v in dropped_by_level.items()
        }

    result = HierarchyResult(
        levels=levels,
        verdict="inconclusive",
        certified_level=None,
        cap=None if cap is None else float(cap),
        mode=config.mode,
        diagnostics=diagnostics,
    )

    attaining = result.attaining_level(config.tol_gap)
    final = attaining.certificate if attaining is not None else result.final_certificate()
    if final is None:
        result.verdict = "inconclusive"
        diagnostics["reason"] = "no level produced a usable certificate"
        return result

    search = find_saddle_point(
        problem,
        final,
        kkt_tol=config.kkt_tol,
        start=config.feasible_point or problem.feasible_point,
    )
    result.saddle_search = search

    best_verified = attaining

    if search.saddle is not None:
        certify = certify_finite_convergence(search.saddle)
        result.certify = certify
        value = float(problem.objective.eval([float(v) for v in search.saddle.point]))
        diagnostics["minimizer_value"] = value
        if certify.certified and best_verified is not None:
            if abs(best_verified.bound - value) <= max(
                config.tol_gap, 1e-9 * (1 + abs(value))
            ):
                saddle_report = verify_saddle(problem, search.saddle, kkt_tol=config.kkt_tol)
                result.saddle_verification = saddle_report
                if saddle_report.verified:
                    result.verdict = "finite_convergence_certified"
                    result.certified_level = best_verified.level
                else:
                    diagnostics["reason"] = (
                        "saddle point failed independent verification: "
                        + saddle_report.detail
                    )
            else:
                diagnostics["reason"] = (
                    f"bound {best_verified.bound:.9g} does not match the minimizer "
                    f"value {value:.9g} within tol_gap"
                )
        elif certify.certified:
            diagnostics["reason"] = "no verified certificate at any level"
        else:
            diagnostics["reason"] = (
                "saddle point found but finite-convergence certification withheld: "
                + certify.reason
            )
    else:
        result.certify = certify_finite_convergence(None)
        # Claim asymptotic-only convergence only on a structural KKT failure
        # at a converged estimate; a marginal numeric miss stays inconclusive.
        structural = search.max_violation > max(1e-2, 100 * config.kkt_tol)
        if search.estimate_converged and structural:
            result.verdict = "asymptotic_only"
            diagnostics["reason"] = (
                "no Lagrangian saddle point at the computed minimizer "
                f"(worst KKT residual {search.max_violation:.3e}); finite convergence "
                "requires one, so only asymptotic convergence is available"
            )
        elif search.estimate_converged:
            diagnostics["reason"] = (
                f"saddle search failed marginally (residual {search.max_violation:.3e}); "
                "cannot distinguish a numeric miss from true absence"
            )
        else:
            diagnostics["reason"] = (
                "saddle search failed and the minimizer estimate did not converge"
            )

    if structure is not None and not structure["all_convex"]:
        diagnostics["convexity_conditional"] = True
    return result


def _attach_structure(problem, config, backend, diagnostics):
    if not config.attach_structure:
        return None
    if problem.structure is None:
        rng = np.random.default_rng(config.seed)
        reports = {
            "objective": analyze_polynomial(problem.objective, backend=backend, rng=rng),
            "constraints": [
                analyze_polynomial(g, backend=backend, rng=rng) for g in problem.constraints
            ],
        }
        problem.structure = reports
    reports = problem.structure
    all_convex = reports["objective"].convexity.certified and all(
        r.convexity.certified for r in reports["constraints"]
    )
    diagnostics["structure"] = {
        "objective": reports["objective"].to_json_dict(),
        "constraints": [r.to_json_dict() for r in reports["constraints"]],
        "all_convex": all_convex,
    }
    if not all_convex:
        diagnostics["structure"]["note"] = (
            "convexity not certified for every polynomial; bounds remain valid "
            "but convergence claims are conditional on convexity"
        )
    return diagnostics["structure"]


def _dropped_at(problem: Problem, k: int) -> list[tuple[str, int]]:
    dropped = []
    for idx, g in enumerate(problem.constraints):
        if 2 * k < g.degree():
            dropped.append((constraint_label(idx), g.degree()))
    return dropped


def _solve_level(problem, k, cap, config, backend) -> LevelOutcome:
    start = time.perf_counter()
    try:
        program = build_program(
            problem, k, c=cap, mode=config.mode, multipliers=config.multipliers
        )
        certificate = solve_program(program, backend)
    except BackendFailure as exc:
        return LevelOutcome(
            level=k,
            bound=float("-inf"),
            status="failed",
            wall_time=time.perf_counter() - start,
            error=str(exc),
        )
    elapsed = time.perf_counter() - start
    outcome = LevelOutcome(
        level=k,
        bound=certificate.mu_star,
        status=certificate.backend_status,
        wall_time=elapsed,
        certificate=certificate,
    )
    if certificate.backend_status in ("optimal", "inaccurate") and certificate.grams:
        report = verify_certificate(problem, certificate, c=cap)
        outcome.verification = report
        outcome.verified = report.verified
    else:
        outcome.verified = False
    return outcome


# ----------------------------------------------------------------------
# mode comparison
# ----------------------------------------------------------------------


@dataclass
class ModeComparisonRow:
    level: int
    standard_bound: float
    extended_bound: float
    gap: float
    standard_infeasible_extended_feasible: bool

    def to_json_dict(self) -> dict:
        def bound(value: float):
            if value == float("-inf"):
                return "-inf"
            if value != value:  # backend failure left no bound
                return "failed"
            return value

        return {
            "level": self.level,
            "standard_bound": bound(self.standard_bound),
            "extended_bound": bound(self.extended_bound),
            "gap": None if self.gap != self.gap else self.gap,  # NaN -> null
            "standard_infeasible_extended_feasible": self.standard_infeasible_extended_feasible,
        }


@dataclass
class ModeComparison:
    rows: list[ModeComparisonRow]
    cap: float | None

    def to_json_dict(self) -> dict:
        return {"cap": self.cap, "rows": [row.to_json_dict() for row in self.rows]}


def compare_modes(
    problem: Problem,
    config: HierarchyConfig | None = None,
    backend: "SdpBackend | None" = None,
) -> ModeComparison:
    """Standard versus extended bounds per level.

    The extended module contains the standard one, so extended bounds
    dominate; rows where the standard truncation is infeasible while the
    extended one is not are flagged.
    """
    config = config or HierarchyConfig()
    if backend is None:
        from .backends import default_backend

        backend = default_backend()
    cap = choose_c(problem, config)
    k_min = config.k_min if config.k_min is not None else default_k_min(problem)
    k_max = config.k_max if config.k_max is not None else k_min + 2

    rows = []
    for k in range(k_min, k_max + 1):
        bounds = {}
        for mode in ("standard", "extended"):
            try:
                program = build_program(problem, k, c=cap, mode=mode)
                certificate = solve_program(program, backend)
                bounds[mode] = certificate.mu_star
            except BackendFailure:
                bounds[mode] = float("nan")
        std, ext = bounds["standard"], bounds["extended"]
        flagged = std == float("-inf") and ext > float("-inf") and ext == ext
        gap = ext - std if (std > float("-inf") and std == std and ext == ext) else float("nan")
        rows.append(
            ModeComparisonRow(
                level=k,
                standard_bound=std,
                extended_bound=ext,
                gap=gap,
                standard_infeasible_extended_feasible=flagged,
            )
        )
    return ModeComparison(rows=rows, cap=float(cap))

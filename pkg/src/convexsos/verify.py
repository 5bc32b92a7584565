"""Independent certificate and saddle-point verification.

Certificates come from a floating-point solver and are never trusted as-is.
Verification re-expands the claimed identity

    base + sum_i multiplier_i * (-g_i) + cap * (c - f) + mu - f  ==  0

coefficient by coefficient.  The expansion runs twice: once over exact
rationals (Gram entries rounded by continued fractions at a bounded
denominator) and once in floats.  If the rounded-rational residual exceeds
tolerance the float residual is authoritative and the report is graded
"numeric"; a residual of exactly zero earns the "exact" grade.

All functions are pure; verifying many certificates in parallel is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .poly import Exponents, Polynomial
from .problem import Problem, SaddlePoint
from .sos_sdp import (
    BASE_LABEL,
    CAP_LABEL,
    BasisMismatch,
    Certificate,
    MissingBlock,
    constraint_label,
    gram_polynomial,
)

PSD_TOL = 1e-8
RATIONALIZE_MAX_DENOMINATOR = 10**6


@dataclass
class VerificationReport:
    residual_inf_norm: float
    psd_margins: dict[str, float]
    identity_exact: bool
    grade: str  # "exact" | "rational" | "numeric"
    verdict: str  # "verified" | "failed"
    detail: str = ""
    tol: float = 0.0
    checks: dict[str, float] | None = None  # per-check residuals (saddle reports)

    @property
    def verified(self) -> bool:
        return self.verdict == "verified"

    def to_json_dict(self) -> dict:
        return {
            "residual_inf_norm": self.residual_inf_norm,
            "psd_margins": dict(self.psd_margins),
            "identity_exact": self.identity_exact,
            "grade": self.grade,
            "verdict": self.verdict,
            "detail": self.detail,
            "tol": self.tol,
            "checks": dict(self.checks) if self.checks is not None else None,
        }


def rationalize_matrix(matrix: np.ndarray, max_denominator: int = RATIONALIZE_MAX_DENOMINATOR):
    """Symmetrize, then round each entry to the nearest rational with a
    bounded denominator (continued-fraction rounding)."""
    matrix = np.asarray(matrix, dtype=float)
    sym = 0.5 * (matrix + matrix.T)
    return [
        [Fraction(float(v)).limit_denominator(max_denominator) for v in row] for row in sym
    ]


def _rational_gram_polynomial(entries, basis: Sequence[Exponents]) -> Polynomial:
    n = len(basis[0]) if basis else 0
    terms: dict[Exponents, Fraction] = {}
    size = len(basis)
    for i in range(size):
        for j in range(i, size):
            weight = entries[i][j] if i == j else entries[i][j] + entries[j][i]
            if weight == 0:
                continue
            mono = tuple(a + b for a, b in zip(basis[i], basis[j]))
            terms[mono] = terms.get(mono, Fraction(0)) + weight
    return Polynomial(n, terms)


def _block_multipliers(problem: Problem, cert: Certificate, c) -> dict[str, Polynomial]:
    """The generator polynomial each Gram block scales, in exact arithmetic."""
    n = problem.n
    f = problem.objective.as_rational()
    multipliers: dict[str, Polynomial] = {BASE_LABEL: Polynomial.constant(n, 1)}
    for idx, g in enumerate(problem.constraints):
        multipliers[constraint_label(idx)] = -g.as_rational()
    if CAP_LABEL in cert.bases:
        if c is None:
            raise ValueError("certificate has a cap block but no cap value is available")
        multipliers[CAP_LABEL] = Polynomial.constant(n, Fraction(c) if not isinstance(c, Fraction) else c) - f
    return multipliers


def verify_certificate(
    problem: Problem,
    cert: Certificate,
    c=None,
    tol: float | None = None,
    psd_tol: float = PSD_TOL,
    max_denominator: int = RATIONALIZE_MAX_DENOMINATOR,
) -> VerificationReport:
    """Check a certificate against the membership identity it claims.

    Default tolerance is 1e-6 * (1 + max |coefficient of f|).  The verdict
    requires both the coefficient residual within tolerance and every Gram
    matrix PSD within ``psd_tol``.
    """
    if BASE_LABEL not in cert.grams:
        raise MissingBlock(BASE_LABEL)
    for label, gram in cert.grams.items():
        basis = cert.bases.get(label)
        if basis is None or np.asarray(gram).shape != (len(basis), len(basis)):
            raise BasisMismatch(f"block {label}: Gram shape does not match its basis")

    if c is None:
        c = cert.cap if cert.cap is not None else problem.cap
    if tol is None:
        tol = 1e-6 * (1.0 + problem.objective.max_abs_coefficient())

    f_exact = problem.objective.as_rational()
    n = problem.n
    multipliers = _block_multipliers(problem, cert, c)

    # Exact path: rationalized Grams, exact expansion.
    mu_exact = Fraction(float(cert.mu_star)).limit_denominator(max_denominator)
    expansion = Polynomial.constant(n, mu_exact) - f_exact
    if cert.fixed_multipliers is not None:
        for lam, g in zip(cert.fixed_multipliers, problem.constraints):
            lam_exact = Fraction(float(lam)).limit_denominator(max_denominator)
            if lam_exact != 0:
                expansion = expansion - g.as_rational().scale(lam_exact)
    for label in sorted(cert.grams):
        if label not in multipliers:
            raise MissingBlock(f"no generator for block {label}")
        entries = rationalize_matrix(cert.grams[label], max_denominator)
        expansion = expansion + _rational_gram_polynomial(entries, cert.bases[label]) * multipliers[label]
    exact_residual = expansion
    identity_exact = exact_residual.is_zero()
    exact_norm = exact_residual.max_abs_coefficient()

    psd_margins = cert.psd_margins()
    psd_ok = all(margin >= -psd_tol for margin in psd_margins.values())

    if identity_exact:
        residual = 0.0
        grade = "exact"
    elif exact_norm <= tol:
        residual = exact_norm
        grade = "rational"
    else:
        # Rounding destroyed the identity; measure it on the raw floats.
        residual = _float_residual(problem, cert, c)
        grade = "numeric"

    ok = residual <= tol and psd_ok
    detail = ""
    if not ok:
        if residual > tol:
            detail = f"residual {residual:.3e} exceeds tolerance {tol:.3e}"
        else:
            worst = min(psd_margins.values())
            detail = f"PSD margin {worst:.3e} below -{psd_tol:.1e}"
    report = VerificationReport(
        residual_inf_norm=float(residual),
        psd_margins=psd_margins,
        identity_exact=identity_exact,
        grade=grade,
        verdict="verified" if ok else "failed",
        detail=detail,
        tol=tol,
    )
    cert.residual_norm = report.residual_inf_norm
    return report


def _float_residual(problem: Problem, cert: Certificate, c) -> float:
    n = problem.n
    f = problem.objective.as_float()
    expansion = Polynomial.constant(n, float(cert.mu_star)) - f
    if cert.fixed_multipliers is not None:
        for lam, g in zip(cert.fixed_multipliers, problem.constraints):
            expansion = expansion - g.as_float().scale(float(lam))
    for idx, g in enumerate(problem.constraints):
        label = constraint_label(idx)
        if label in cert.grams:
            expansion = expansion - gram_polynomial(cert.grams[label], cert.bases[label]) * g.as_float()
    if CAP_LABEL in cert.grams:
        cap_poly = Polynomial.constant(n, float(c)) - f
        expansion = expansion + gram_polynomial(cert.grams[CAP_LABEL], cert.bases[CAP_LABEL]) * cap_poly
    expansion = expansion + gram_polynomial(cert.grams[BASE_LABEL], cert.bases[BASE_LABEL])
    return expansion.max_abs_coefficient()


# ----------------------------------------------------------------------
# saddle points
# ----------------------------------------------------------------------


def verify_saddle(
    problem: Problem,
    saddle: SaddlePoint,
    kkt_tol: float = 1e-5,
    rng: np.random.Generator | None = None,
    primal_samples: int = 200,
    dual_samples: int = 50,
    sample_tol: float = 1e-7,
) -> VerificationReport:
    """Check the saddle inequalities L(x, l*) >= L(x*, l*) >= L(x*, l).

    KKT residuals (stationarity, feasibility, complementarity, sign) are
    evaluated at the point; the two saddle inequalities are then sampled:
    random x within distance 10 of the point, and random multipliers in
    [0, 10]^m.
    """
    rng = rng or np.random.default_rng(0)
    x = [float(v) for v in saddle.point]
    lambdas = [float(v) for v in saddle.multipliers]
    checks: dict[str, float] = {}

    checks["multiplier_sign"] = max((max(-lam, 0.0) for lam in lambdas), default=0.0)
    checks["feasibility"] = max(
        (max(float(g.eval(x)), 0.0) for g in problem.constraints), default=0.0
    )
    lagrangian = problem.lagrangian(lambdas).as_float()
    grad = [float(v) for v in lagrangian.gradient_at(x)]
    checks["stationarity"] = max((abs(v) for v in grad), default=0.0)
    checks["complementarity"] = max(
        (abs(lam * float(g.eval(x))) for lam, g in zip(lambdas, problem.constraints)),
        default=0.0,
    )

    value = float(lagrangian.eval(x))
    primal_gap = 0.0
    for _ in range(primal_samples):
        offset = rng.normal(size=problem.n)
        norm = np.linalg.norm(offset)
        if norm > 0:
            offset *= rng.uniform(0, 10) / norm
        candidate = (np.asarray(x) + offset).tolist()
        primal_gap = max(primal_gap, value - float(lagrangian.eval(candidate)))
    checks["primal_inequality"] = max(primal_gap - sample_tol, 0.0)

    dual_gap = 0.0
    f_at_x = float(problem.objective.eval(x))
    for _ in range(dual_samples):
        trial = rng.uniform(0, 10, size=problem.m)
        trial_value = f_at_x + sum(
            t * float(g.eval(x)) for t, g in zip(trial, problem.constraints)
        )
        dual_gap = max(dual_gap, trial_value - value)
    checks["dual_inequality"] = max(dual_gap - sample_tol, 0.0)

    kkt_keys = ("multiplier_sign", "feasibility", "stationarity", "complementarity")
    worst_kkt = max(checks[k] for k in kkt_keys)
    sampled_ok = checks["primal_inequality"] <= 0.0 and checks["dual_inequality"] <= 0.0
    ok = worst_kkt <= kkt_tol and sampled_ok
    failing = [k for k in checks if checks[k] > (kkt_tol if k in kkt_keys else 0.0)]
    return VerificationReport(
        residual_inf_norm=worst_kkt,
        psd_margins={},
        identity_exact=False,
        grade="numeric",
        verdict="verified" if ok else "failed",
        detail="" if ok else "violated: " + ", ".join(sorted(failing)),
        tol=kkt_tol,
        checks=checks,
    )

"""Structural diagnostics for convex polynomial programs.

The central facts exploited here:

* the directions along which a polynomial is constant form a linear
  subspace, computable as the null space of a stacked gradient-coefficient
  matrix;
* a convex polynomial bounded below becomes, after an orthogonal change of
  variables separating that invariance subspace, a coercive polynomial in
  the remaining variables;
* a convex polynomial whose Hessian is positive definite at any single
  point is strictly convex and coercive everywhere.

Convexity itself is NP-hard to decide, so the screens here are one-sided:
an SOS certificate for the Hessian quadratic form proves convexity, random
midpoint sampling can disprove it, and everything else stays "unknown".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .poly import AffineMap, Polynomial
from .sos_sdp import (
    BackendFailure,
    GramBlock,
    assemble_program,
    build_sos_feasibility,
    constraint_label,
    monomial_basis,
    solve_program,
)

if TYPE_CHECKING:  # pragma: no cover
    from .backends import SdpBackend

RANK_RTOL = 1e-9
DECOMP_COEFF_TOL = 1e-8


class ResidualTooLarge(RuntimeError):
    """Eliminated variables still carry coefficients above tolerance."""


@dataclass(frozen=True)
class InvarianceSubspace:
    """Orthonormal basis of directions d with h(x + t d) = h(x) for all x, t."""

    basis: tuple[tuple[float, ...], ...]
    dim: int

    def as_array(self) -> np.ndarray:
        if self.dim == 0:
            return np.zeros((0, 0))
        return np.array(self.basis, dtype=float).T  # columns are directions


@dataclass(frozen=True)
class CoerciveDecomposition:
    """Orthogonal change of variables splitting off the invariant directions.

    ``transform`` is orthogonal with the first ``active_count`` columns
    spanning the complement of the invariance subspace; ``reduced`` is the
    polynomial in those first coordinates with h(A x) = reduced(x_1..x_l).
    """

    transform: np.ndarray
    active_count: int
    reduced: Polynomial

    def to_json_dict(self) -> dict:
        return {
            "active_count": self.active_count,
            "transform": [[float(v) for v in row] for row in self.transform],
            "reduced": self.reduced.to_json_dict(),
        }


@dataclass(frozen=True)
class ConvexityVerdict:
    status: str  # "sos-convex" | "unknown" | "not-convex"
    witness: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    detail: str = ""

    @property
    def certified(self) -> bool:
        return self.status == "sos-convex"

    def to_json_dict(self) -> dict:
        data: dict = {"status": self.status}
        if self.witness is not None:
            data["witness"] = [list(self.witness[0]), list(self.witness[1])]
        if self.detail:
            data["detail"] = self.detail
        return data


@dataclass(frozen=True)
class BoundVerdict:
    status: str  # "certified" | "unknown"
    bound: float | None = None
    detail: str = ""

    def to_json_dict(self) -> dict:
        data: dict = {"status": self.status}
        if self.bound is not None:
            data["bound"] = self.bound
        if self.detail:
            data["detail"] = self.detail
        return data


@dataclass(frozen=True)
class HessianPdReport:
    pd: bool
    min_eigenvalue: float
    threshold: float
    coercive: bool
    strictly_convex: bool

    def to_json_dict(self) -> dict:
        return {
            "pd": self.pd,
            "min_eigenvalue": self.min_eigenvalue,
            "threshold": self.threshold,
            "coercive": self.coercive,
            "strictly_convex": self.strictly_convex,
        }


@dataclass
class StructureReport:
    """What the screens could establish about one polynomial."""

    convexity: ConvexityVerdict
    bounded_below: BoundVerdict
    coercive: str  # "yes" | "no" | "unknown"
    hessian_pd_witness: tuple[float, ...] | None = None

    def to_json_dict(self) -> dict:
        return {
            "convexity": self.convexity.to_json_dict(),
            "bounded_below": self.bounded_below.to_json_dict(),
            "coercive": self.coercive,
            "hessian_pd_witness": list(self.hessian_pd_witness)
            if self.hessian_pd_witness is not None
            else None,
        }


# ----------------------------------------------------------------------
# invariance subspace and coercive decomposition
# ----------------------------------------------------------------------


def _gradient_coefficient_matrix(h: Polynomial) -> np.ndarray:
    """Rows indexed by monomials, columns by variables: entry = coefficient
    of that monomial in dh/dx_i.  d lies in the invariance subspace exactly
    when this matrix maps it to zero (grad h . d vanishes identically)."""
    partials = [p.as_float() for p in h.gradient()]
    monomials = sorted({m for p in partials for m in p.terms})
    if not monomials:
        return np.zeros((1, h.n))
    matrix = np.zeros((len(monomials), h.n))
    for col, partial in enumerate(partials):
        for row, mono in enumerate(monomials):
            matrix[row, col] = float(partial.terms.get(mono, 0.0))
    return matrix


def invariance_subspace(h: Polynomial, rank_rtol: float = RANK_RTOL) -> InvarianceSubspace:
    """Directions along which ``h`` is constant, via null(stacked gradient)."""
    matrix = _gradient_coefficient_matrix(h)
    _, singular_values, vt = np.linalg.svd(matrix)
    cutoff = rank_rtol * (singular_values[0] if singular_values.size else 0.0)
    rank = int(np.sum(singular_values > cutoff))
    null_vectors = vt[rank:]
    return InvarianceSubspace(
        basis=tuple(tuple(float(v) for v in vec) for vec in null_vectors),
        dim=h.n - rank,
    )


def orthogonal_split(h: Polynomial, rank_rtol: float = RANK_RTOL) -> tuple[np.ndarray, int]:
    """Orthogonal matrix whose leading columns span the complement of the
    invariance subspace; returns (A, l) with l the complement dimension."""
    matrix = _gradient_coefficient_matrix(h)
    _, singular_values, vt = np.linalg.svd(matrix)
    cutoff = rank_rtol * (singular_values[0] if singular_values.size else 0.0)
    rank = int(np.sum(singular_values > cutoff))
    active = vt[:rank]
    invariant = vt[rank:]
    columns = np.vstack([active, invariant]).T if (rank + invariant.shape[0]) else np.eye(h.n)
    return columns, rank


def coercive_decomposition(
    h: Polynomial, coeff_tol: float = DECOMP_COEFF_TOL, rank_rtol: float = RANK_RTOL
) -> CoerciveDecomposition:
    """Split ``h`` as h(A x) = g(x_1..x_l) with A orthogonal.

    Meaningful when ``h`` is convex and bounded below (then ``g`` is
    coercive); computed for any input, with the identity checked by a
    coefficient residual.  Raises ResidualTooLarge when the supposedly
    eliminated variables still carry weight, which signals a miscomputed
    invariance subspace or non-convex input.
    """
    n = h.n
    transform, rank = orthogonal_split(h, rank_rtol=rank_rtol)
    active = max(rank, 1)  # a constant polynomial keeps one (vacuous) variable
    composed = h.as_float().compose_affine(AffineMap.linear(transform.tolist()))
    scale = coeff_tol * (1.0 + h.max_abs_coefficient())
    reduced_terms = {}
    for mono, coef in composed.terms.items():
        if any(mono[i] for i in range(active, n)):
            if abs(float(coef)) > scale:
                raise ResidualTooLarge(
                    f"eliminated variables carry coefficient {float(coef):.3e} "
                    f"on monomial {mono} (tolerance {scale:.3e})"
                )
            continue
        reduced_terms[mono[:active]] = coef
    reduced = Polynomial(active, reduced_terms)
    return CoerciveDecomposition(transform=transform, active_count=active, reduced=reduced)


def lift_reduced(decomp: CoerciveDecomposition, n: int) -> Polynomial:
    """Re-embed the reduced polynomial into n variables (trailing exponents 0)."""
    terms = {
        mono + (0,) * (n - decomp.active_count): coef
        for mono, coef in decomp.reduced.terms.items()
    }
    return Polynomial(n, terms)


# ----------------------------------------------------------------------
# Hessian-based coercivity and strict convexity
# ----------------------------------------------------------------------


def hessian_pd_tolerance(hessian: np.ndarray) -> float:
    # Scale-aware threshold for calling a minimum eigenvalue "positive".
    return 1e-8 * (1.0 + float(np.trace(np.abs(hessian))))


def hessian_pd_coercivity(
    f: Polynomial, point: Sequence[float], assume_convex: bool = True
) -> HessianPdReport:
    """Positive-definite Hessian at one point.

    For a convex polynomial this single-point test already implies global
    coercivity and strict convexity; without the convexity assumption the
    implications are withheld.
    """
    hessian = np.asarray(
        [[float(v) for v in row] for row in f.hessian_at([float(x) for x in point])],
        dtype=float,
    )
    threshold = hessian_pd_tolerance(hessian)
    min_eig = float(np.linalg.eigvalsh(hessian).min()) if hessian.size else 0.0
    pd = min_eig > threshold
    return HessianPdReport(
        pd=pd,
        min_eigenvalue=min_eig,
        threshold=threshold,
        coercive=pd and assume_convex,
        strictly_convex=pd and assume_convex,
    )


def ray_boundedness_evidence(
    f: Polynomial,
    point: Sequence[float],
    directions: int = 100,
    t_max: float = 1e6,
    rng: np.random.Generator | None = None,
) -> dict:
    """Sampled evidence that the sublevel set {f <= f(point)+1} is bounded.

    Along each random unit ray from ``point``, search for a step at which f
    exceeds f(point)+1.  Returns per-direction escape steps; evidence only,
    not a proof.
    """
    rng = rng or np.random.default_rng(0)
    base = np.asarray([float(v) for v in point], dtype=float)
    level = float(f.eval(base.tolist())) + 1.0
    escapes = []
    all_bounded = True
    for _ in range(directions):
        d = rng.normal(size=f.n)
        d /= np.linalg.norm(d)
        t = 1e-3
        escaped_at = None
        while t <= t_max:
            if float(f.eval((base + t * d).tolist())) > level:
                escaped_at = t
                break
            t *= 2.0
        if escaped_at is None:
            all_bounded = False
            escapes.append(float("inf"))
        else:
            escapes.append(escaped_at)
    return {
        "all_bounded": all_bounded,
        "max_escape_step": max(escapes) if escapes else 0.0,
        "directions": directions,
        "level": level,
    }


def sphere_minimum(
    f: Polynomial,
    radius: float,
    samples: int = 500,
    rng: np.random.Generator | None = None,
) -> float:
    """Sampled minimum of f over the sphere of the given radius."""
    rng = rng or np.random.default_rng(0)
    best = math.inf
    for _ in range(samples):
        d = rng.normal(size=f.n)
        d *= radius / np.linalg.norm(d)
        best = min(best, float(f.eval(d.tolist())))
    return best


# ----------------------------------------------------------------------
# convexity / boundedness / Archimedean screens
# ----------------------------------------------------------------------


def hessian_quadratic_form(p: Polynomial) -> Polynomial:
    """The polynomial H(x, z) = z^T (Hessian p)(x) z in 2n variables."""
    n = p.n
    total = Polynomial.zero(2 * n)
    hessian = p.hessian()
    for i in range(n):
        for j in range(n):
            entry = hessian[i][j]
            if entry.is_zero():
                continue
            lifted_terms = {}
            for mono, coef in entry.terms.items():
                z_part = [0] * n
                z_part[i] += 1
                z_part[j] += 1
                lifted_terms[tuple(mono) + tuple(z_part)] = coef
            total = total + Polynomial(2 * n, lifted_terms)
    return total


def _z_linear_basis(n: int, x_degree: int) -> tuple:
    """Monomials z_i * x^alpha with |alpha| <= x_degree, in 2n variables."""
    basis = []
    for alpha in monomial_basis(n, x_degree):
        for i in range(n):
            z_part = tuple(1 if t == i else 0 for t in range(n))
            basis.append(tuple(alpha) + z_part)
    return tuple(sorted(basis, key=lambda m: (sum(m), m)))


def convexity_screen(
    p: Polynomial,
    samples: int = 200,
    backend: "SdpBackend | None" = None,
    rng: np.random.Generator | None = None,
) -> ConvexityVerdict:
    """One-sided convexity test.

    First attempts an SOS certificate for the Hessian quadratic form
    (SOS-convexity, sufficient for convexity); on failure, searches for a
    midpoint-inequality violation; otherwise reports unknown.
    """
    if p.degree() <= 1:
        return ConvexityVerdict("sos-convex", detail="affine (zero Hessian form)")
    if backend is None:
        from .backends import default_backend

        backend = default_backend()

    form = hessian_quadratic_form(p).as_float()
    if form.is_zero():
        return ConvexityVerdict("sos-convex", detail="zero Hessian form")
    x_degree = max((p.degree() - 2) // 2, 0)
    basis = _z_linear_basis(p.n, x_degree)
    try:
        cert = solve_program(build_sos_feasibility(form, basis), backend)
        if cert.backend_status == "optimal":
            return ConvexityVerdict("sos-convex", detail="Hessian form admits an SOS Gram matrix")
    except BackendFailure:
        pass

    rng = rng or np.random.default_rng(0)
    witness = _midpoint_violation(p, samples, rng)
    if witness is not None:
        return ConvexityVerdict("not-convex", witness=witness, detail="midpoint inequality violated")
    return ConvexityVerdict("unknown", detail="no SOS certificate and no sampled violation")


def _midpoint_violation(p, samples, rng):
    pf = p.as_float()
    for scale in (1.0, 5.0, 25.0):
        for _ in range(samples):
            a = rng.normal(scale=scale, size=p.n)
            b = rng.normal(scale=scale, size=p.n)
            fa = float(pf.eval(a.tolist()))
            fb = float(pf.eval(b.tolist()))
            fm = float(pf.eval(((a + b) / 2).tolist()))
            gap = fm - 0.5 * (fa + fb)
            if gap > 1e-8 * (1.0 + abs(fa) + abs(fb)):
                return (tuple(float(v) for v in a), tuple(float(v) for v in b))
    return None


def midpoint_gap(p: Polynomial, witness) -> float:
    """Re-check a non-convexity witness: positive means the midpoint
    inequality is violated."""
    a, b = witness
    mid = [(x + y) / 2 for x, y in zip(a, b)]
    pf = p.as_float()
    return float(pf.eval(mid)) - 0.5 * (float(pf.eval(list(a))) + float(pf.eval(list(b))))


def bounded_below_screen(p: Polynomial, backend: "SdpBackend | None" = None) -> BoundVerdict:
    """SOS lower bound: sup{mu : p - mu is SOS}.

    Sufficient only; a bounded-below polynomial with no SOS bound yields
    "unknown", never an error.
    """
    if backend is None:
        from .backends import default_backend

        backend = default_backend()
    n = p.n
    k = max(1, (p.degree() + 1) // 2)
    block = GramBlock("base", monomial_basis(n, k), Polynomial.constant(n, 1))
    program = assemble_program(
        p.as_float(), [block], maximize_mu=True, row_monomials=monomial_basis(n, 2 * k)
    )
    try:
        cert = solve_program(program, backend)
    except BackendFailure as exc:
        return BoundVerdict("unknown", detail=f"backend failure: {exc}")
    if cert.backend_status == "optimal":
        return BoundVerdict("certified", bound=float(cert.mu_star))
    return BoundVerdict("unknown", detail=f"backend status {cert.backend_status}")


def archimedean_screen(
    constraints: Sequence[Polynomial],
    n: int,
    backend: "SdpBackend | None" = None,
    radii: Sequence[float] = (1.0, 10.0, 100.0),
) -> dict:
    """Heuristic check that the constraint module is Archimedean.

    Attempts an SOS representation of N - |x|^2 over the constraint module
    at small degree for a few N; success proves the feasible set is bounded.
    Failure proves nothing.
    """
    if backend is None:
        from .backends import default_backend

        backend = default_backend()
    if not constraints:
        return {"archimedean": False, "detail": "no constraints", "radius": None}
    k = max(1, max((g.degree() + 1) // 2 for g in constraints))
    norm_sq = Polynomial(
        n, {tuple(2 if j == i else 0 for j in range(n)): 1 for i in range(n)}
    )
    for radius in radii:
        target = (Polynomial.constant(n, radius) - norm_sq).as_float()
        blocks = [GramBlock("base", monomial_basis(n, k), Polynomial.constant(n, 1))]
        for idx, g in enumerate(constraints):
            if 2 * k < g.degree():
                continue
            basis_degree = (2 * k - g.degree()) // 2
            blocks.append(GramBlock(constraint_label(idx), monomial_basis(n, basis_degree), -g))
        program = assemble_program(target, blocks, maximize_mu=False)
        try:
            cert = solve_program(program, backend)
        except BackendFailure:
            continue
        if cert.backend_status == "optimal":
            return {"archimedean": True, "radius": radius, "detail": f"|x|^2 <= {radius} certified"}
    return {"archimedean": False, "radius": None, "detail": "no certificate at screened radii"}


# ----------------------------------------------------------------------
# report assembly
# ----------------------------------------------------------------------


def analyze_polynomial(
    p: Polynomial,
    backend: "SdpBackend | None" = None,
    rng: np.random.Generator | None = None,
) -> StructureReport:
    """Run all screens on one polynomial and assemble a StructureReport."""
    if backend is None:
        from .backends import default_backend

        backend = default_backend()
    rng = rng or np.random.default_rng(0)
    convexity = convexity_screen(p, backend=backend, rng=rng)
    bounded = bounded_below_screen(p, backend=backend)

    witness = None
    coercive = "unknown"
    if convexity.certified:
        for candidate in _pd_candidate_points(p, rng):
            report = hessian_pd_coercivity(p, candidate, assume_convex=True)
            if report.pd:
                witness = tuple(float(v) for v in candidate)
                coercive = "yes"
                break
        if witness is None and p.degree() >= 1:
            subspace = invariance_subspace(p)
            if subspace.dim > 0 and not p.is_zero() and p.degree() > 0:
                coercive = "no"  # constant along an invariant direction
    return StructureReport(
        convexity=convexity,
        bounded_below=bounded,
        coercive=coercive,
        hessian_pd_witness=witness,
    )


def _pd_candidate_points(p: Polynomial, rng: np.random.Generator):
    yield [0.0] * p.n
    for _ in range(4):
        yield rng.normal(size=p.n).tolist()

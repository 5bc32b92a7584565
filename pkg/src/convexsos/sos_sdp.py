"""Encoding of truncated-quadratic-module membership as a semidefinite program.

The membership question "is ``f - mu`` expressible as

    sigma_base * 1  -  sum_i sigma_i * g_i  +  sigma_cap * (c - f)

with every sigma a sum of squares of bounded degree?" becomes an SDP: one
PSD Gram matrix per multiplier, plus one linear coefficient-matching
equality per monomial of degree at most ``2k``.  Programs are assembled
deterministically (graded-lex ordering throughout) so the serialized form
is byte-stable for identical inputs.

Block labels are functional: ``base`` for the free SOS term, ``constraint_i``
for the multiplier of the i-th constraint, ``cap`` for the multiplier of the
objective cap ``c - f``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .poly import Exponents, Polynomial, Scalar, monomial_key

if TYPE_CHECKING:  # pragma: no cover
    from .backends import SdpBackend
    from .problem import Problem

PSD_TOL = 1e-8
FEAS_TOL = 1e-7

BASE_LABEL = "base"
CAP_LABEL = "cap"


def constraint_label(index: int) -> str:
    return f"constraint_{index}"


class LevelTooSmall(ValueError):
    """The relaxation level cannot accommodate the objective degree."""


class NegativeMultiplier(ValueError):
    """Sharp mode was given a negative fixed multiplier."""


class NotPsd(ValueError):
    """A Gram matrix fails positive semidefiniteness beyond tolerance."""


class BackendFailure(RuntimeError):
    """The SDP backend failed; carries the backend diagnostics."""


class MissingBlock(KeyError):
    """A certificate lacks a Gram block the program structure requires."""


class BasisMismatch(ValueError):
    """A Gram matrix's shape disagrees with its monomial basis."""


def monomial_basis(n: int, max_degree: int) -> tuple[Exponents, ...]:
    """All monomials in ``n`` variables of total degree <= ``max_degree``,
    in graded-lex order."""
    out: set[Exponents] = set()
    for total in range(max_degree + 1):
        for combo in combinations_with_replacement(range(n), total):
            e = [0] * n
            for i in combo:
                e[i] += 1
            out.add(tuple(e))
    return tuple(sorted(out, key=monomial_key))


@dataclass(frozen=True)
class GramBlock:
    """One PSD variable: an SOS multiplier over a monomial basis.

    ``multiplier`` is the generator polynomial the block scales in the
    membership identity (1 for the free block, -g_i for constraints,
    c - f for the cap).
    """

    label: str
    basis: tuple[Exponents, ...]
    multiplier: Polynomial

    @property
    def size(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class EqualityRow:
    """Coefficient-matching constraint for one monomial.

    entries are (block_index, i, j, weight) over upper-triangular Gram
    positions; symmetric off-diagonal entries carry weight 2.  The row reads

        sum(entries) + mu_coefficient * mu == rhs
    """

    monomial: Exponents
    entries: tuple[tuple[int, int, int, float], ...]
    mu_coefficient: float
    rhs: float


@dataclass(frozen=True)
class TruncatedModuleSpec:
    """Bookkeeping for one truncation level: which generators survive.

    A generator whose degree exceeds ``2k`` admits no SOS multiplier at this
    level and is dropped; dropped generators are recorded so callers can
    explain low-level infeasibility.
    """

    level: int
    mode: str
    cap_value: float | None
    retained: tuple[tuple[str, int], ...]  # (label, multiplier basis degree)
    dropped: tuple[tuple[str, int], ...]  # (label, generator degree)

    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "mode": self.mode,
            "cap_value": self.cap_value,
            "retained": [list(item) for item in self.retained],
            "dropped": [list(item) for item in self.dropped],
        }


@dataclass(frozen=True)
class SosProgram:
    """An assembled membership SDP: Gram blocks, equality rows, objective."""

    n: int
    blocks: tuple[GramBlock, ...]
    equalities: tuple[EqualityRow, ...]
    maximize_mu: bool
    module: TruncatedModuleSpec | None = None
    fixed_multipliers: tuple[float, ...] | None = None

    def block(self, label: str) -> GramBlock:
        for blk in self.blocks:
            if blk.label == label:
                return blk
        raise MissingBlock(label)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "maximize_mu": self.maximize_mu,
            "blocks": [
                {
                    "label": blk.label,
                    "size": blk.size,
                    "basis": [list(m) for m in blk.basis],
                    "multiplier": blk.multiplier.to_json_dict(),
                }
                for blk in self.blocks
            ],
            "equalities": [
                {
                    "monomial": list(row.monomial),
                    "entries": [[b, i, j, w] for (b, i, j, w) in row.entries],
                    "mu_coefficient": row.mu_coefficient,
                    "rhs": row.rhs,
                }
                for row in self.equalities
            ],
            "module": self.module.to_json_dict() if self.module else None,
            "fixed_multipliers": list(self.fixed_multipliers)
            if self.fixed_multipliers is not None
            else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


def assemble_program(
    target: Polynomial,
    blocks: Sequence[GramBlock],
    *,
    maximize_mu: bool,
    row_monomials: Sequence[Exponents] | None = None,
    module: TruncatedModuleSpec | None = None,
    fixed_multipliers: tuple[float, ...] | None = None,
) -> SosProgram:
    """Match coefficients of ``sum_q sigma_q * multiplier_q`` against
    ``target - mu`` (mu omitted unless ``maximize_mu``).

    ``row_monomials`` defaults to the union of all producible product
    monomials and the target's support; rows the blocks cannot touch still
    appear so that an unmatchable target is honestly infeasible.
    """
    n = target.n
    target = target.as_float()
    rows: dict[Exponents, list[tuple[int, int, int, float]]] = {}
    for b_idx, blk in enumerate(blocks):
        multiplier = blk.multiplier.as_float()
        for i in range(blk.size):
            for j in range(i, blk.size):
                weight = 1.0 if i == j else 2.0
                pair = tuple(a + b for a, b in zip(blk.basis[i], blk.basis[j]))
                for gm, gc in multiplier.terms.items():
                    mono = tuple(a + b for a, b in zip(pair, gm))
                    rows.setdefault(mono, []).append((b_idx, i, j, weight * gc))
    if row_monomials is None:
        monos = set(rows) | set(target.terms)
        row_monomials = sorted(monos, key=monomial_key)
    zero = (0,) * n
    equalities = []
    for mono in row_monomials:
        entries = tuple(sorted(rows.get(mono, ())))
        mu_coefficient = 1.0 if (maximize_mu and mono == zero) else 0.0
        rhs = float(target.terms.get(mono, 0.0))
        equalities.append(EqualityRow(mono, entries, mu_coefficient, rhs))
    return SosProgram(
        n=n,
        blocks=tuple(blocks),
        equalities=tuple(equalities),
        maximize_mu=maximize_mu,
        module=module,
        fixed_multipliers=fixed_multipliers,
    )


def build_program(
    problem: "Problem",
    k: int,
    c: Scalar | None = None,
    mode: str = "extended",
    multipliers: Sequence[Scalar] | None = None,
    claimed_bound: Scalar | None = None,
) -> SosProgram:
    """Build the level-``k`` membership program for ``f - mu``.

    Modes:
      * ``extended``: free block, one SOS multiplier per retained constraint,
        plus the cap block for ``c - f``.
      * ``standard``: same without the cap block.
      * ``sharp``: fixed scalar multipliers on the constraints (no Gram
        blocks for them), free block plus cap block.

    With ``claimed_bound`` the bound variable is pinned: the program becomes
    the pure feasibility question "is f - claimed_bound in the truncated
    module?", which is how a claimed certificate is instantiated or refuted.
    """
    f = problem.objective
    n = problem.n
    deg_f = f.degree()
    if 2 * k < deg_f:
        raise LevelTooSmall(f"level {k} too small: 2k < deg f = {deg_f}")
    if mode not in ("extended", "standard", "sharp"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode in ("extended", "sharp"):
        if c is None:
            raise ValueError(f"mode {mode!r} requires the cap value c")
        cap_poly = Polynomial.constant(n, c) - f

    blocks: list[GramBlock] = [GramBlock(BASE_LABEL, monomial_basis(n, k), Polynomial.constant(n, 1))]
    retained: list[tuple[str, int]] = [(BASE_LABEL, k)]
    dropped: list[tuple[str, int]] = []
    target = f
    fixed: tuple[float, ...] | None = None

    if mode == "sharp":
        if multipliers is None or len(multipliers) != problem.m:
            raise ValueError("sharp mode requires one fixed multiplier per constraint")
        for lam in multipliers:
            if float(lam) < 0:
                raise NegativeMultiplier(f"sharp multiplier {lam} is negative")
        fixed = tuple(float(lam) for lam in multipliers)
        # Fixed lambda_i g_i terms move into the matching target.
        for lam, g in zip(multipliers, problem.constraints):
            if lam != 0:
                target = target + g.scale(lam)
    else:
        for idx, g in enumerate(problem.constraints):
            label = constraint_label(idx)
            deg_g = g.degree()
            if 2 * k < deg_g:
                dropped.append((label, deg_g))
                continue
            basis_degree = (2 * k - deg_g) // 2
            blocks.append(GramBlock(label, monomial_basis(n, basis_degree), -g))
            retained.append((label, basis_degree))

    if mode in ("extended", "sharp"):
        cap_degree = (2 * k - deg_f) // 2
        blocks.append(GramBlock(CAP_LABEL, monomial_basis(n, cap_degree), cap_poly))
        retained.append((CAP_LABEL, cap_degree))

    if claimed_bound is not None:
        target = target - Polynomial.constant(n, claimed_bound)
    module = TruncatedModuleSpec(
        level=k,
        mode=mode,
        cap_value=float(c) if c is not None and mode != "standard" else None,
        retained=tuple(retained),
        dropped=tuple(dropped),
    )
    return assemble_program(
        target,
        blocks,
        maximize_mu=claimed_bound is None,
        row_monomials=monomial_basis(n, 2 * k),
        module=module,
        fixed_multipliers=fixed,
    )


def build_sos_feasibility(target: Polynomial, basis: Sequence[Exponents]) -> SosProgram:
    """Feasibility program: is ``target`` a sum of squares over ``basis``?"""
    block = GramBlock(BASE_LABEL, tuple(basis), Polynomial.constant(target.n, 1))
    return assemble_program(target, [block], maximize_mu=False)


# ----------------------------------------------------------------------
# certificates
# ----------------------------------------------------------------------


@dataclass
class Certificate:
    """A solved membership claim: the bound plus its Gram matrices.

    ``residual_norm`` is stamped by verification, not by the solver.
    """

    mu_star: float
    level: int
    mode: str
    cap: float | None
    bases: dict[str, tuple[Exponents, ...]]
    grams: dict[str, np.ndarray]
    fixed_multipliers: tuple[float, ...] | None = None
    backend_status: str = "unknown"
    backend_name: str = ""
    residual_norm: float | None = None
    attained: bool | None = None
    message: str = ""

    def gram_polynomial(self, label: str) -> Polynomial:
        """Expand one block's multiplier polynomial b(x)^T G b(x) (floats)."""
        if label not in self.grams:
            raise MissingBlock(label)
        return gram_polynomial(self.grams[label], self.bases[label])

    def multiplier_value(self, label: str, point: Sequence[float]) -> float:
        if label not in self.grams:
            return 0.0
        return float(self.gram_polynomial(label).eval([float(v) for v in point]))

    def psd_margins(self) -> dict[str, float]:
        margins = {}
        for label, gram in self.grams.items():
            sym = 0.5 * (gram + gram.T)
            margins[label] = float(np.linalg.eigvalsh(sym).min()) if sym.size else 0.0
        return margins

    def to_json_dict(self) -> dict:
        return {
            "mu_star": _json_float(self.mu_star),
            "level": self.level,
            "mode": self.mode,
            "cap": self.cap,
            "backend_status": self.backend_status,
            "backend_name": self.backend_name,
            "residual_norm": self.residual_norm,
            "attained": self.attained,
            "message": self.message,
            "fixed_multipliers": list(self.fixed_multipliers)
            if self.fixed_multipliers is not None
            else None,
            "blocks": [
                {
                    "label": label,
                    "size": len(self.bases[label]),
                    "basis": [list(m) for m in self.bases[label]],
                    "entries": [repr(float(v)) for v in np.asarray(self.grams[label]).ravel()],
                }
                for label in sorted(self.grams)
            ],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Certificate":
        bases: dict[str, tuple[Exponents, ...]] = {}
        grams: dict[str, np.ndarray] = {}
        for blk in data.get("blocks", []):
            label = blk["label"]
            size = int(blk["size"])
            basis = tuple(tuple(int(e) for e in m) for m in blk["basis"])
            entries = np.array([float(v) for v in blk["entries"]], dtype=float)
            if len(basis) != size or entries.size != size * size:
                raise BasisMismatch(
                    f"block {label}: got {entries.size} entries for declared size {size}"
                )
            bases[label] = basis
            grams[label] = entries.reshape(size, size)
        mu = data["mu_star"]
        fixed = data.get("fixed_multipliers")
        return cls(
            mu_star=float("-inf") if mu == "-inf" else float(mu),
            level=int(data["level"]),
            mode=str(data.get("mode", "extended")),
            cap=None if data.get("cap") is None else float(data["cap"]),
            bases=bases,
            grams=grams,
            fixed_multipliers=tuple(float(v) for v in fixed) if fixed is not None else None,
            backend_status=str(data.get("backend_status", "unknown")),
            backend_name=str(data.get("backend_name", "")),
            residual_norm=data.get("residual_norm"),
            attained=data.get("attained"),
            message=str(data.get("message", "")),
        )

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path) -> "Certificate":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_json_dict(json.load(handle))


def _json_float(value: float):
    if value == float("-inf"):
        return "-inf"
    if value == float("inf"):
        return "inf"
    return value


def gram_polynomial(gram: np.ndarray, basis: Sequence[Exponents]) -> Polynomial:
    """Expand b(x)^T G b(x) into a float-coefficient polynomial."""
    gram = np.asarray(gram, dtype=float)
    if gram.shape != (len(basis), len(basis)):
        raise BasisMismatch(f"gram shape {gram.shape} does not match basis size {len(basis)}")
    n = len(basis[0]) if basis else 0
    terms: dict[Exponents, float] = {}
    size = len(basis)
    for i in range(size):
        for j in range(i, size):
            weight = gram[i, j] if i == j else gram[i, j] + gram[j, i]
            if weight == 0.0:
                continue
            mono = tuple(a + b for a, b in zip(basis[i], basis[j]))
            terms[mono] = terms.get(mono, 0.0) + float(weight)
    return Polynomial(n, terms)


def gram_to_sos(
    gram: np.ndarray, basis: Sequence[Exponents], psd_tol: float = PSD_TOL
) -> list[Polynomial]:
    """Split a PSD Gram matrix into explicit squares.

    Eigendecomposes the symmetrized matrix, clamps slightly negative
    eigenvalues at zero, and returns sqrt(lambda_j) * (v_j . basis) so that
    the sum of the squares reproduces b^T G b.
    """
    gram = np.asarray(gram, dtype=float)
    if gram.shape != (len(basis), len(basis)):
        raise BasisMismatch(f"gram shape {gram.shape} does not match basis size {len(basis)}")
    if gram.size == 0:
        return []
    sym = 0.5 * (gram + gram.T)
    eigenvalues, eigenvectors = np.linalg.eigh(sym)
    if eigenvalues.min() < -psd_tol:
        raise NotPsd(f"minimum eigenvalue {eigenvalues.min():.3e} below -{psd_tol:.1e}")
    n = len(basis[0]) if basis else 0
    squares = []
    for lam, vec in zip(eigenvalues, eigenvectors.T):
        if lam <= 0.0:
            continue
        scale = float(np.sqrt(lam))
        terms: dict[Exponents, float] = {}
        for coef, mono in zip(vec, basis):
            value = scale * float(coef)
            if value != 0.0:
                terms[mono] = terms.get(mono, 0.0) + value
        squares.append(Polynomial(n, terms))
    return squares


def program_residual(
    program: SosProgram, grams: Mapping[str, np.ndarray], mu: float | None
) -> float:
    """Maximum absolute violation of the program's equality rows."""
    by_index = [grams.get(blk.label) for blk in program.blocks]
    worst = 0.0
    for row in program.equalities:
        total = 0.0
        for b_idx, i, j, weight in row.entries:
            gram = by_index[b_idx]
            if gram is None:
                continue
            total += weight * float(gram[i, j])
        if row.mu_coefficient and mu is not None:
            total += row.mu_coefficient * mu
        worst = max(worst, abs(total - row.rhs))
    return worst


def solve_program(
    program: SosProgram,
    backend: "SdpBackend",
    psd_tol: float = PSD_TOL,
    feas_tol: float = FEAS_TOL,
) -> Certificate:
    """Solve a membership program and decode the result into a Certificate.

    The backend is untrusted: on an ``optimal`` status the Gram matrices are
    re-checked for PSD violation and equality residuals, and the status is
    downgraded to ``inaccurate`` if either check fails.  An infeasible
    program yields mu = -inf with no blocks (the supremum over an empty set).
    """
    capability = backend.capability()
    if capability.max_block_size is not None:
        largest = max((blk.size for blk in program.blocks), default=0)
        if largest > capability.max_block_size:
            raise BackendFailure(
                f"backend {backend.name} handles blocks up to "
                f"{capability.max_block_size}, program needs {largest}"
            )
    solution = backend.solve(program)
    module = program.module
    level = module.level if module else 0
    mode = module.mode if module else "feasibility"
    cap = module.cap_value if module else None

    if solution.status == "infeasible":
        return Certificate(
            mu_star=float("-inf"),
            level=level,
            mode=mode,
            cap=cap,
            bases={},
            grams={},
            fixed_multipliers=program.fixed_multipliers,
            backend_status="infeasible",
            backend_name=backend.name,
            attained=False,
            message=solution.message,
        )
    if solution.status in ("failed", "unbounded") or solution.grams is None:
        raise BackendFailure(
            f"backend {backend.name} returned status {solution.status}: {solution.message}"
        )

    grams = {
        blk.label: 0.5 * (solution.grams[blk.label] + solution.grams[blk.label].T)
        for blk in program.blocks
    }
    status = solution.status
    message = solution.message
    if status == "optimal":
        margins = {
            label: float(np.linalg.eigvalsh(g).min()) if g.size else 0.0
            for label, g in grams.items()
        }
        residual = program_residual(program, grams, solution.mu)
        if residual > feas_tol or any(m < -psd_tol for m in margins.values()):
            status = "inaccurate"
            message = (
                f"revalidation failed: equality residual {residual:.3e}, "
                f"worst psd margin {min(margins.values()):.3e}"
            )

    mu = solution.mu if solution.mu is not None else 0.0
    return Certificate(
        mu_star=float(mu),
        level=level,
        mode=mode,
        cap=cap,
        bases={blk.label: blk.basis for blk in program.blocks},
        grams=grams,
        fixed_multipliers=program.fixed_multipliers,
        backend_status=status,
        backend_name=backend.name,
        attained=(status == "optimal") or None,
        message=message,
    )

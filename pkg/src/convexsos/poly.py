"""Sparse multivariate polynomials with exact-rational or float coefficients.

Monomials are exponent tuples of fixed length ``n``; polynomials are
coefficient maps over them.  Two coefficient regimes coexist:

* the rational path (``fractions.Fraction``, the default for integer and
  string input) supports exact identity checking, and
* the float path (IEEE doubles) feeds numeric work such as SDP assembly.

Arithmetic preserves whichever regime the operands are in; mixing degrades
to floats via ordinary Python numeric coercion.  All values are immutable
after construction and every operation is a pure function, so instances are
safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Exponents = tuple[int, ...]
Scalar = Union[int, float, Fraction]


class DimensionMismatch(ValueError):
    """A point or map does not match the polynomial's variable count."""


def monomial_degree(exponents: Exponents) -> int:
    return sum(exponents)


def monomial_key(exponents: Exponents) -> tuple[int, Exponents]:
    """Graded-lexicographic sort key: total degree first, then exponents.

    Fixed globally so that monomial bases, SDP block layouts and serialized
    output are deterministic.
    """
    return (sum(exponents), exponents)


def parse_coefficient(text: str) -> Fraction:
    """Parse a coefficient string exactly.

    Accepts plain integers, decimal strings (including scientific notation)
    and ``p/q`` fraction strings.
    """
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    return Fraction(Decimal(text))


def format_coefficient(value: Scalar) -> str:
    """Render a coefficient as a string that :func:`parse_coefficient` inverts.

    Rationals with a terminating decimal expansion are written as decimals;
    other rationals fall back to ``p/q``.  Floats use ``repr`` (shortest
    round-trip form).
    """
    if isinstance(value, float):
        return repr(value)
    frac = Fraction(value)
    if frac.denominator == 1:
        return str(frac.numerator)
    den = frac.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        shift = max(twos, fives)
        scaled = frac.numerator * 10**shift // frac.denominator
        text = str(abs(scaled)).rjust(shift + 1, "0")
        sign = "-" if scaled < 0 else ""
        return f"{sign}{text[:-shift]}.{text[-shift:]}"
    return f"{frac.numerator}/{frac.denominator}"


def _coerce(value: Scalar) -> Scalar:
    if isinstance(value, bool):
        raise TypeError("bool is not a polynomial coefficient")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (float, Fraction)):
        return value
    raise TypeError(f"unsupported coefficient type {type(value).__name__}")


@dataclass(frozen=True)
class Polynomial:
    """A sparse polynomial in ``n`` variables.

    ``terms`` maps exponent tuples to nonzero coefficients.  The zero
    polynomial has an empty term map and, by convention, degree 0; callers
    that care must branch on :meth:`is_zero`.
    """

    n: int
    terms: Mapping[Exponents, Scalar]

    def __post_init__(self) -> None:
        clean: dict[Exponents, Scalar] = {}
        for exponents, coefficient in self.terms.items():
            exponents = tuple(int(e) for e in exponents)
            if len(exponents) != self.n:
                raise DimensionMismatch(
                    f"exponent tuple {exponents} has length {len(exponents)}, expected {self.n}"
                )
            if any(e < 0 for e in exponents):
                raise ValueError(f"negative exponent in {exponents}")
            coefficient = _coerce(coefficient)
            if coefficient != 0:
                clean[exponents] = coefficient
        object.__setattr__(self, "terms", clean)

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls(n, {})

    @classmethod
    def constant(cls, n: int, value: Scalar) -> "Polynomial":
        return cls(n, {(0,) * n: value})

    @classmethod
    def variable(cls, n: int, index: int) -> "Polynomial":
        if not 0 <= index < n:
            raise DimensionMismatch(f"variable index {index} out of range for n={n}")
        exponents = tuple(1 if i == index else 0 for i in range(n))
        return cls(n, {exponents: Fraction(1)})

    @classmethod
    def variables(cls, n: int) -> tuple["Polynomial", ...]:
        """The coordinate polynomials (x_0, ..., x_{n-1})."""
        return tuple(cls.variable(n, i) for i in range(n))

    @classmethod
    def monomial(cls, n: int, exponents: Sequence[int], coefficient: Scalar = 1) -> "Polynomial":
        return cls(n, {tuple(exponents): coefficient})

    # ------------------------------------------------------------------
    # structure
    # ------------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Maximum total degree; 0 for the zero polynomial."""
        if not self.terms:
            return 0
        return max(monomial_degree(m) for m in self.terms)

    def is_rational(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.terms.values())

    def sorted_terms(self) -> list[tuple[Exponents, Scalar]]:
        return sorted(self.terms.items(), key=lambda item: monomial_key(item[0]))

    def coefficient(self, exponents: Sequence[int]) -> Scalar:
        return self.terms.get(tuple(exponents), Fraction(0))

    def max_abs_coefficient(self) -> float:
        if not self.terms:
            return 0.0
        return max(abs(float(c)) for c in self.terms.values())

    def as_float(self) -> "Polynomial":
        return Polynomial(self.n, {m: float(c) for m, c in self.terms.items()})

    def as_rational(self) -> "Polynomial":
        """Exact embedding: floats become the rationals they denote."""
        return Polynomial(self.n, {m: Fraction(c) for m, c in self.terms.items()})

    # ------------------------------------------------------------------
    # ring operations
    # ------------------------------------------------------------------

    def _check_same_space(self, other: "Polynomial") -> None:
        if self.n != other.n:
            raise DimensionMismatch(f"mixed variable counts {self.n} and {other.n}")

    def __add__(self, other: Union["Polynomial", Scalar]) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n, other)
        self._check_same_space(other)
        result = dict(self.terms)
        for m, c in other.terms.items():
            result[m] = result.get(m, 0) + c
        return Polynomial(self.n, result)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: Union["Polynomial", Scalar]) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n, other)
        return self + (-other)

    def __rsub__(self, other: Scalar) -> "Polynomial":
        return Polynomial.constant(self.n, other) - self

    def __mul__(self, other: Union["Polynomial", Scalar]) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check_same_space(other)
        result: dict[Exponents, Scalar] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                result[m] = result.get(m, 0) + c1 * c2
        return Polynomial(self.n, result)

    def __rmul__(self, other: Scalar) -> "Polynomial":
        return self.scale(other)

    def scale(self, factor: Scalar) -> "Polynomial":
        factor = _coerce(factor)
        return Polynomial(self.n, {m: c * factor for m, c in self.terms.items()})

    def __pow__(self, exponent: int) -> "Polynomial":
        if exponent < 0:
            raise ValueError("negative polynomial powers are not defined")
        result = Polynomial.constant(self.n, 1)
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base if e > 1 else base
            e >>= 1
        return result

    # ------------------------------------------------------------------
    # calculus and evaluation
    # ------------------------------------------------------------------

    def eval(self, point: Sequence[Scalar]) -> Scalar:
        """Term-wise evaluation; exact when coefficients and point are rational."""
        if len(point) != self.n:
            raise DimensionMismatch(f"point has length {len(point)}, expected {self.n}")
        total: Scalar = 0
        for exponents, coefficient in self.terms.items():
            value = coefficient
            for x, e in zip(point, exponents):
                if e:
                    value = value * x**e
            total = total + value
        return total

    def partial(self, index: int) -> "Polynomial":
        """Partial derivative with respect to variable ``index``, exact."""
        if not 0 <= index < self.n:
            raise DimensionMismatch(f"variable index {index} out of range for n={self.n}")
        result: dict[Exponents, Scalar] = {}
        for exponents, coefficient in self.terms.items():
            e = exponents[index]
            if e == 0:
                continue
            lowered = list(exponents)
            lowered[index] = e - 1
            result[tuple(lowered)] = coefficient * e
        return Polynomial(self.n, result)

    def gradient(self) -> tuple["Polynomial", ...]:
        return tuple(self.partial(i) for i in range(self.n))

    def hessian(self) -> tuple[tuple["Polynomial", ...], ...]:
        """Symmetric matrix of second partials, as polynomials."""
        grads = self.gradient()
        rows = []
        for i in range(self.n):
            rows.append(tuple(grads[i].partial(j) for j in range(self.n)))
        return tuple(rows)

    def gradient_at(self, point: Sequence[Scalar]) -> list[Scalar]:
        return [g.eval(point) for g in self.gradient()]

    def hessian_at(self, point: Sequence[Scalar]) -> list[list[Scalar]]:
        return [[entry.eval(point) for entry in row] for row in self.hessian()]

    def compose_affine(self, amap: "AffineMap") -> "Polynomial":
        """Substitute ``x -> A x + b``: the result satisfies q(x) = p(Ax + b).

        Exact in the rational path when the map entries are rational.
        """
        if amap.n != self.n:
            raise DimensionMismatch(f"map dimension {amap.n} does not match n={self.n}")
        images = []
        for i in range(self.n):
            terms: dict[Exponents, Scalar] = {}
            for j in range(self.n):
                a = amap.matrix[i][j]
                if a != 0:
                    exponents = tuple(1 if t == j else 0 for t in range(self.n))
                    terms[exponents] = a
            offset = amap.offset[i]
            if offset != 0:
                terms[(0,) * self.n] = offset
            images.append(Polynomial(self.n, terms))

        power_cache: list[dict[int, Polynomial]] = [
            {0: Polynomial.constant(self.n, 1)} for _ in range(self.n)
        ]

        def image_power(i: int, e: int) -> Polynomial:
            cache = power_cache[i]
            if e not in cache:
                cache[e] = image_power(i, e - 1) * images[i]
            return cache[e]

        total = Polynomial.zero(self.n)
        for exponents, coefficient in self.terms.items():
            term = Polynomial.constant(self.n, coefficient)
            for i, e in enumerate(exponents):
                if e:
                    term = term * image_power(i, e)
            total = total + term
        return total

    # ------------------------------------------------------------------
    # serialization and display
    # ------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"exp": list(m), "coef": format_coefficient(c)}
                for m, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Polynomial":
        n = int(data["n"])
        terms: dict[Exponents, Scalar] = {}
        for entry in data.get("terms", []):
            exponents = tuple(int(e) for e in entry["exp"])
            coefficient = parse_coefficient(str(entry["coef"]))
            terms[exponents] = terms.get(exponents, Fraction(0)) + coefficient
        return cls(n, terms)

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        if names is None:
            names = _default_names(self.n)
        pieces = []
        for exponents, coefficient in self.sorted_terms():
            factors = []
            for name, e in zip(names, exponents):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            c = float(coefficient) if isinstance(coefficient, float) else coefficient
            if not factors:
                body = format_coefficient(coefficient)
            elif c == 1:
                body = "*".join(factors)
            elif c == -1:
                body = "-" + "*".join(factors)
            else:
                body = format_coefficient(coefficient) + "*" + "*".join(factors)
            pieces.append(body)
        text = pieces[0]
        for piece in pieces[1:]:
            if piece.startswith("-"):
                text += " - " + piece[1:]
            else:
                text += " + " + piece
        return text

    def __str__(self) -> str:
        return self.to_string()


def _default_names(n: int) -> list[str]:
    if n <= 3:
        return ["x", "y", "z"][:n]
    return [f"x{i + 1}" for i in range(n)]


@dataclass(frozen=True)
class AffineMap:
    """An affine change of variables ``x -> A x + b`` on n-space."""

    matrix: tuple[tuple[Scalar, ...], ...]
    offset: tuple[Scalar, ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(_coerce(v) for v in row) for row in self.matrix)
        off = tuple(_coerce(v) for v in self.offset)
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise DimensionMismatch("affine map matrix must be square")
        if len(off) != n:
            raise DimensionMismatch("affine map offset length must match the matrix")
        object.__setattr__(self, "matrix", rows)
        object.__setattr__(self, "offset", off)

    @property
    def n(self) -> int:
        return len(self.matrix)

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        rows = tuple(
            tuple(Fraction(1) if i == j else Fraction(0) for j in range(n)) for i in range(n)
        )
        return cls(rows, (Fraction(0),) * n)

    @classmethod
    def linear(cls, matrix: Iterable[Iterable[Scalar]]) -> "AffineMap":
        rows = tuple(tuple(row) for row in matrix)
        return cls(rows, (0,) * len(rows))

    def apply(self, point: Sequence[Scalar]) -> list[Scalar]:
        if len(point) != self.n:
            raise DimensionMismatch("point length does not match map dimension")
        return [
            sum(a * x for a, x in zip(row, point)) + b
            for row, b in zip(self.matrix, self.offset)
        ]

"""Cross-check the polynomial engine against sympy as an independent oracle."""

from fractions import Fraction

import numpy as np
import pytest

sympy = pytest.importorskip("sympy")

from convexsos import AffineMap, Polynomial


def to_sympy(p: Polynomial, symbols):
    expr = sympy.Integer(0)
    for exponents, coefficient in p.terms.items():
        term = sympy.Rational(coefficient) if isinstance(coefficient, Fraction) else sympy.Float(coefficient)
        for s, e in zip(symbols, exponents):
            term *= s**e
        expr += term
    return sympy.expand(expr)


@pytest.fixture(scope="module")
def sample():
    x, y = Polynomial.variables(2)
    p = (
        Fraction(3, 2) * x**3 * y
        - 2 * x * y**2
        + x * x
        + Fraction(7, 4) * y
        - 5
    )
    symbols = sympy.symbols("u v")
    return p, to_sympy(p, symbols), symbols


def test_eval_matches(sample):
    p, expr, symbols = sample
    rng = np.random.default_rng(0)
    for _ in range(10):
        pt = [Fraction(int(v), 8) for v in rng.integers(-16, 17, size=2)]
        ours = p.eval(pt)
        theirs = expr.subs({s: sympy.Rational(v) for s, v in zip(symbols, pt)})
        assert sympy.Rational(ours) == theirs


def test_gradient_matches(sample):
    p, expr, symbols = sample
    for i, s in enumerate(symbols):
        ours = to_sympy(p.partial(i), symbols)
        assert sympy.simplify(ours - sympy.diff(expr, s)) == 0


def test_hessian_matches(sample):
    p, expr, symbols = sample
    hessian = p.hessian()
    for i, si in enumerate(symbols):
        for j, sj in enumerate(symbols):
            ours = to_sympy(hessian[i][j], symbols)
            assert sympy.simplify(ours - sympy.diff(expr, si, sj)) == 0


def test_compose_affine_matches(sample):
    p, expr, symbols = sample
    matrix = [[Fraction(1, 2), Fraction(-1, 3)], [Fraction(2), Fraction(1, 5)]]
    offset = [Fraction(1), Fraction(-2)]
    composed = p.compose_affine(AffineMap(tuple(map(tuple, matrix)), tuple(offset)))
    u, v = symbols
    substituted = expr.subs(
        {
            u: matrix[0][0] * u + matrix[0][1] * v + offset[0],
            v: matrix[1][0] * u + matrix[1][1] * v + offset[1],
        },
        simultaneous=True,
    )
    assert sympy.simplify(to_sympy(composed, symbols) - substituted) == 0


def test_product_matches(sample):
    p, expr, symbols = sample
    q = p * p
    assert sympy.simplify(to_sympy(q, symbols) - sympy.expand(expr * expr)) == 0

"""Problem files: parsing, round trips, Lagrangian assembly."""

import json
from fractions import Fraction

import pytest

from convexsos import DimensionMismatch, Polynomial, Problem
from convexsos import corpus as corpus_module

x, y = Polynomial.variables(2)


def test_corpus_files_parse():
    for name in corpus_module.corpus_names():
        problem = corpus_module.load(name)
        assert problem.n >= 1


def test_roundtrip_byte_stable(tmp_path):
    for name in corpus_module.corpus_names():
        problem = corpus_module.load(name)
        path = tmp_path / "p.json"
        problem.dump(path)
        first = path.read_text()
        Problem.load(path).dump(path)
        assert path.read_text() == first


def test_exact_coordinates():
    problem = Problem.from_json_dict(
        {
            "n": 1,
            "objective": {"n": 1, "terms": [{"exp": [1], "coef": "1"}]},
            "feasible_point": ["0.5"],
            "c": "2/3",
        }
    )
    assert problem.feasible_point == (Fraction(1, 2),)
    assert problem.cap == Fraction(2, 3)


def test_lagrangian():
    problem = Problem(objective=x + y, constraints=(x * x - 1, y * y - 1))
    lagrangian = problem.lagrangian([Fraction(1, 2), Fraction(1, 4)])
    expected = x + y + Fraction(1, 2) * (x * x - 1) + Fraction(1, 4) * (y * y - 1)
    assert lagrangian == expected


def test_feasibility_check():
    problem = corpus_module.load("ex32")
    assert problem.is_feasible([0.0])
    assert not problem.is_feasible([2.0])
    assert problem.constraint_violation([2.0]) == pytest.approx(3.0)


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        Problem(objective=x + y, constraints=(Polynomial.variable(3, 0),))
    with pytest.raises(DimensionMismatch):
        Problem(objective=x + y, feasible_point=(0.0,))


def test_notes_preserved(tmp_path):
    problem = corpus_module.load("ex32")
    assert "multiplier 1/2" in problem.notes
    data = problem.to_json_dict()
    assert json.dumps(data)  # serializable

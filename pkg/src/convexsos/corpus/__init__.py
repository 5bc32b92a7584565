"""Shipped problem instances, loadable by name.

Names: ex32 (interval-constrained linear objective), ex33 (point-feasible
instance with no Lagrangian saddle point), ex-noncompact (halfplane
constraint, finite convergence beyond compactness), ex-unconstrained,
ex-affine-invariant (objective constant along a direction, for analyze),
ex31-pattern (saddle point with singular Lagrangian Hessian).
"""

from __future__ import annotations

import json
from importlib import resources

from ..problem import Problem

_PACKAGE = __name__

CORPUS_NAMES = (
    "ex32",
    "ex33",
    "ex-noncompact",
    "ex-unconstrained",
    "ex-affine-invariant",
    "ex31-pattern",
)


def corpus_names() -> tuple[str, ...]:
    return CORPUS_NAMES


def corpus_text(name: str) -> str:
    if name not in CORPUS_NAMES:
        raise KeyError(f"unknown corpus instance {name!r}; known: {', '.join(CORPUS_NAMES)}")
    return resources.files(_PACKAGE).joinpath(f"{name}.json").read_text(encoding="utf-8")


def load(name: str) -> Problem:
    return Problem.from_json_dict(json.loads(corpus_text(name)))

"""SDP backend contract and the cvxpy-based reference adapter.

A backend consumes an assembled :class:`~convexsos.sos_sdp.SosProgram` and
returns primal Gram matrices plus the bound variable.  Backends are
stateless per solve and callable from worker threads; results are never
trusted blindly (``solve_program`` re-validates them).

Backend selection: an explicit name, else the ``CONVEXSOS_BACKEND``
environment variable, else the first installed solver from the preference
list (CLARABEL, then CVXOPT, then SCS).
"""

from __future__ import annotations

import os
import time
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .sos_sdp import BackendFailure, SosProgram

_PREFERRED_SOLVERS = ("CLARABEL", "CVXOPT", "SCS")

ENV_BACKEND = "CONVEXSOS_BACKEND"


@dataclass(frozen=True)
class BackendCapability:
    name: str
    max_block_size: int | None = None
    feasibility_tolerance: float = 1e-8
    supports_duals: bool = True


@dataclass
class BackendSolution:
    """Raw solver output: status plus primal values.

    status is one of optimal, infeasible, unbounded, inaccurate, failed.
    """

    status: str
    mu: float | None = None
    objective: float | None = None
    grams: dict[str, np.ndarray] | None = None
    duals: dict[str, float] | None = None
    solve_time: float = 0.0
    message: str = ""


class SdpBackend(ABC):
    name: str = "abstract"

    @abstractmethod
    def capability(self) -> BackendCapability:
        ...

    @abstractmethod
    def solve(self, program: SosProgram) -> BackendSolution:
        ...


class CvxpySdpBackend(SdpBackend):
    """Adapter for one native conic solver driven through cvxpy."""

    # Multipliers decoded from Gram blocks drift by roughly the square root
    # of the duality gap along the optimal face, so CLARABEL runs tighter
    # than its stock 1e-8 to keep saddle recovery well inside kkt_tol.
    _DEFAULT_OPTIONS = {
        "CLARABEL": {"tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10},
    }

    def __init__(self, solver: str = "CLARABEL", solver_options: Mapping | None = None):
        import cvxpy  # deferred so the contract is importable without it

        if solver not in cvxpy.installed_solvers():
            raise BackendFailure(f"solver {solver} is not installed")
        self.solver = solver
        if solver_options is None:
            self.solver_options = dict(self._DEFAULT_OPTIONS.get(solver, {}))
        else:
            self.solver_options = dict(solver_options)
        self.name = f"cvxpy/{solver}"

    def capability(self) -> BackendCapability:
        return BackendCapability(name=self.name, max_block_size=None)

    def solve(self, program: SosProgram) -> BackendSolution:
        import cvxpy as cp

        start = time.perf_counter()

        # A row no block can touch is decided immediately.
        for row in program.equalities:
            if not row.entries and row.mu_coefficient == 0.0 and row.rhs != 0.0:
                return BackendSolution(
                    status="infeasible",
                    message=f"monomial {row.monomial} is unreachable with rhs {row.rhs}",
                    solve_time=time.perf_counter() - start,
                )

        gram_vars = []
        for blk in program.blocks:
            if blk.size == 0:
                gram_vars.append(None)
            elif blk.size == 1:
                gram_vars.append(cp.Variable((1, 1), nonneg=True))
            else:
                gram_vars.append(cp.Variable((blk.size, blk.size), PSD=True))
        mu = cp.Variable() if program.maximize_mu else None

        constraints = []
        constrained_rows = []
        for row in program.equalities:
            expr = None
            for b_idx, i, j, weight in row.entries:
                var = gram_vars[b_idx]
                if var is None:
                    continue
                term = weight * var[i, j]
                expr = term if expr is None else expr + term
            if row.mu_coefficient and mu is not None:
                term = row.mu_coefficient * mu
                expr = term if expr is None else expr + term
            if expr is None:
                continue  # vacuous 0 == 0 row
            constraints.append(expr == row.rhs)
            constrained_rows.append(row)

        objective = cp.Maximize(mu) if mu is not None else cp.Minimize(0)
        prob = cp.Problem(objective, constraints)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                prob.solve(solver=self.solver, **self.solver_options)
        except cp.error.SolverError as exc:
            return BackendSolution(
                status="failed",
                message=str(exc),
                solve_time=time.perf_counter() - start,
            )
        elapsed = time.perf_counter() - start

        status = _map_status(prob.status)
        if status in ("failed", "infeasible", "unbounded"):
            return BackendSolution(status=status, message=f"cvxpy status {prob.status}", solve_time=elapsed)

        grams = {}
        for blk, var in zip(program.blocks, gram_vars):
            if var is None:
                grams[blk.label] = np.zeros((0, 0))
            elif var.value is None:
                return BackendSolution(
                    status="failed",
                    message=f"cvxpy status {prob.status} with no value for block {blk.label}",
                    solve_time=elapsed,
                )
            else:
                grams[blk.label] = np.asarray(var.value, dtype=float)
        duals = None
        try:
            duals = {
                ",".join(map(str, row.monomial)): float(con.dual_value)
                for row, con in zip(constrained_rows, constraints)
                if con.dual_value is not None and np.ndim(con.dual_value) == 0
            }
        except Exception:  # duals are informational only
            duals = None
        return BackendSolution(
            status=status,
            mu=float(mu.value) if mu is not None and mu.value is not None else None,
            objective=None if prob.value is None else float(prob.value),
            grams=grams,
            duals=duals,
            solve_time=elapsed,
            message=f"cvxpy status {prob.status}",
        )


def _map_status(status: str) -> str:
    mapping = {
        "optimal": "optimal",
        "infeasible": "infeasible",
        "unbounded": "unbounded",
        "optimal_inaccurate": "inaccurate",
        "infeasible_inaccurate": "infeasible",
        "unbounded_inaccurate": "unbounded",
    }
    return mapping.get(status, "failed")


def available_backends() -> list[str]:
    import cvxpy

    installed = cvxpy.installed_solvers()
    return [name for name in _PREFERRED_SOLVERS if name in installed]


def default_backend(name: str | None = None, solver_options: Mapping | None = None) -> SdpBackend:
    """Resolve a backend by explicit name, environment, or preference order."""
    if name is None:
        name = os.environ.get(ENV_BACKEND)
    if name:
        return CvxpySdpBackend(solver=name.upper(), solver_options=solver_options)
    names = available_backends()
    if not names:
        raise BackendFailure("no supported conic solver is installed")
    return CvxpySdpBackend(solver=names[0], solver_options=solver_options)

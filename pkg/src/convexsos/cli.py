"""Command-line interface: solve, analyze, verify, compare, corpus.

Problem arguments accept either a path to a problem JSON file or the name
of a shipped corpus instance.  Exit codes: 0 on success, 1 when the backend
failed on every level (solve) or verification failed (verify), 2 on input
errors.  ``CONVEXSOS_BACKEND`` selects the conic solver and
``CONVEXSOS_SEED`` seeds the sampling heuristics.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import corpus as corpus_module
from .backends import default_backend
from .convex_analysis import (
    analyze_polynomial,
    archimedean_screen,
    coercive_decomposition,
    hessian_pd_coercivity,
    invariance_subspace,
    ResidualTooLarge,
)
from .hierarchy import (
    HierarchyConfig,
    NoFeasiblePoint,
    compare_modes,
    run_hierarchy,
)
from .problem import Problem
from .sos_sdp import BackendFailure, Certificate, LevelTooSmall
from .verify import verify_certificate


class InputError(click.ClickException):
    """Bad input file or precondition; exits with code 2."""

    exit_code = 2


def _seed() -> int:
    return int(os.environ.get("CONVEXSOS_SEED", "0"))


def _load_problem(spec: str) -> Problem:
    path = Path(spec)
    if path.exists():
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise InputError(
                f"parse error in {path} at byte offset {exc.pos}: {exc.msg}"
            ) from exc
        try:
            return Problem.from_json_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid problem file {path}: {exc}") from exc
    try:
        return corpus_module.load(spec)
    except KeyError:
        raise InputError(
            f"{spec!r} is neither an existing file nor a corpus name "
            f"(known: {', '.join(corpus_module.corpus_names())})"
        )


def _make_backend(name: str | None):
    try:
        return default_backend(name)
    except BackendFailure as exc:
        raise click.ClickException(str(exc))


def _emit_json(data: dict) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True, allow_nan=False))


def _fmt_bound(value: float) -> str:
    if value == float("-inf"):
        return "-inf"
    return f"{value:.9f}"


@click.group()
@click.version_option(package_name="convexsos")
def main() -> None:
    """Convex polynomial programs via capped sum-of-squares relaxations."""


@main.command()
@click.argument("problem_file")
@click.option("--mode", type=click.Choice(["extended", "standard", "sharp"]), default="extended")
@click.option("--k-min", type=int, default=None, help="First relaxation level.")
@click.option("--k-max", type=int, default=None, help="Last relaxation level.")
@click.option("--c", "cap", type=float, default=None, help="Objective cap; defaults to f(x0) + max(1, |f(x0)|).")
@click.option("--tol", "tol_gap", type=float, default=1e-6, help="Gap for early stopping and bound matching.")
@click.option("--lam", "multipliers", type=float, multiple=True, help="Fixed multipliers (sharp mode), one per constraint.")
@click.option("--backend", "backend_name", default=None, help="Conic solver name (CLARABEL, CVXOPT, SCS).")
@click.option("--no-early-stop", is_flag=True, help="Always sweep up to --k-max.")
@click.option("--json", "as_json", is_flag=True, help="Emit the full result as JSON.")
@click.option("--cert-out", type=click.Path(dir_okay=False), default=None, help="Where to write the final certificate (default: <problem>.cert.json).")
def solve(problem_file, mode, k_min, k_max, cap, tol_gap, multipliers, backend_name, no_early_stop, as_json, cert_out):
    """Sweep relaxation levels and report bounds, verdict and certificate."""
    problem = _load_problem(problem_file)
    backend = _make_backend(backend_name)
    config = HierarchyConfig(
        cap=cap,
        k_min=k_min,
        k_max=k_max,
        tol_gap=tol_gap,
        mode=mode,
        multipliers=tuple(multipliers) if multipliers else None,
        early_stop=not no_early_stop,
        seed=_seed(),
    )
    try:
        result = run_hierarchy(problem, config, backend)
    except (NoFeasiblePoint, LevelTooSmall, ValueError) as exc:
        raise InputError(str(exc))

    cert = result.final_certificate()
    cert_path = None
    if cert is not None:
        cert_path = Path(cert_out) if cert_out else _default_cert_path(problem_file)
        cert.dump(cert_path)

    if as_json:
        payload = result.to_json_dict()
        payload["certificate_path"] = str(cert_path) if cert_path else None
        _emit_json(payload)
    else:
        click.echo(f"backend: {backend.name}   mode: {mode}   cap: {result.cap}")
        click.echo(f"{'k':>3s} {'bound':>16s} {'status':>12s} {'verified':>9s} {'time':>8s}")
        for lv in result.levels:
            verified = "-" if lv.verified is None else ("yes" if lv.verified else "no")
            click.echo(
                f"{lv.level:>3d} {_fmt_bound(lv.bound):>16s} {lv.status:>12s} "
                f"{verified:>9s} {lv.wall_time:>7.2f}s"
            )
        verdict = result.verdict
        if verdict == "finite_convergence_certified":
            click.echo(
                f"verdict: finite_convergence_certified (k={result.certified_level}), "
                f"f* ≈ {result.best_bound:.6f}"
            )
        else:
            reason = result.diagnostics.get("reason", "")
            click.echo(f"verdict: {verdict}" + (f" -- {reason}" if reason else ""))
        if result.diagnostics.get("convexity_conditional"):
            click.echo("note: convexity not certified for every input; claims are conditional")
        if cert_path:
            click.echo(f"certificate: {cert_path}")

    if all(lv.status == "failed" for lv in result.levels):
        sys.exit(1)


def _default_cert_path(problem_file: str) -> Path:
    path = Path(problem_file)
    if path.exists():
        return path.with_suffix(".cert.json")
    return Path(f"{problem_file}.cert.json")


@main.command()
@click.argument("problem_file")
@click.option("--backend", "backend_name", default=None)
@click.option("--json", "as_json", is_flag=True)
def analyze(problem_file, backend_name, as_json):
    """Structural diagnostics: convexity, boundedness, invariance, coercive split."""
    problem = _load_problem(problem_file)
    backend = _make_backend(backend_name)
    rng = np.random.default_rng(_seed())
    f = problem.objective

    report = analyze_polynomial(f, backend=backend, rng=rng)
    subspace = invariance_subspace(f)
    decomposition = None
    decomposition_error = None
    try:
        decomposition = coercive_decomposition(f)
    except ResidualTooLarge as exc:
        decomposition_error = str(exc)

    hessian_report = None
    if report.hessian_pd_witness is not None:
        hessian_report = hessian_pd_coercivity(
            f, report.hessian_pd_witness, assume_convex=report.convexity.certified
        )

    constraint_reports = [
        analyze_polynomial(g, backend=backend, rng=rng) for g in problem.constraints
    ]
    archimedean = (
        archimedean_screen(problem.constraints, problem.n, backend=backend)
        if problem.constraints
        else None
    )

    if as_json:
        payload = {
            "objective": report.to_json_dict(),
            "invariance_dim": subspace.dim,
            "invariance_basis": [list(v) for v in subspace.basis],
            "decomposition": decomposition.to_json_dict() if decomposition else None,
            "decomposition_error": decomposition_error,
            "hessian": hessian_report.to_json_dict() if hessian_report else None,
            "constraints": [r.to_json_dict() for r in constraint_reports],
            "archimedean": archimedean,
        }
        _emit_json(payload)
        return

    names = ["u", "v", "w"] if decomposition and decomposition.active_count <= 3 else None
    click.echo(f"objective: {f}")
    click.echo(f"convexity: {report.convexity.status}" + (f" ({report.convexity.detail})" if report.convexity.detail else ""))
    if report.convexity.witness:
        a, b = report.convexity.witness
        click.echo(f"  witness pair: {list(np.round(a, 6))} / {list(np.round(b, 6))}")
    bound = report.bounded_below
    click.echo(
        "bounded below: "
        + (f"certified (>= {bound.bound:.6f})" if bound.status == "certified" else "unknown")
    )
    click.echo(f"dim E = {subspace.dim} (invariant directions)")
    if decomposition is not None:
        reduced = decomposition.reduced.to_string(names)
        click.echo(f"l = {decomposition.active_count}, reduced polynomial: {reduced}")
    elif decomposition_error:
        click.echo(f"decomposition failed: {decomposition_error}")
    if hessian_report is not None:
        point = [round(float(v), 6) for v in report.hessian_pd_witness]
        click.echo(
            f"Hessian PD at {point} => coercive, strictly convex "
            f"(min eigenvalue {hessian_report.min_eigenvalue:.6f})"
        )
    else:
        click.echo("no Hessian PD witness found; no coercivity claim from the Hessian test")
    for idx, rep in enumerate(constraint_reports):
        click.echo(f"constraint {idx}: convexity {rep.convexity.status}")
    if archimedean is not None:
        if archimedean["archimedean"]:
            click.echo(f"constraint module: Archimedean (|x|^2 <= {archimedean['radius']:g} certified)")
        else:
            click.echo("constraint module: Archimedean certificate not found at screened radii")


@main.command()
@click.argument("problem_file")
@click.argument("certificate_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=None, help="Residual tolerance (default 1e-6 scaled).")
@click.option("--json", "as_json", is_flag=True)
def verify(problem_file, certificate_file, tol, as_json):
    """Re-check a certificate in exact arithmetic; exit 0 iff verified."""
    problem = _load_problem(problem_file)
    try:
        cert = Certificate.load(certificate_file)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"parse error in {certificate_file} at byte offset {exc.pos}: {exc.msg}"
        )
    except (KeyError, ValueError) as exc:
        raise InputError(f"invalid certificate file: {exc}")
    report = verify_certificate(problem, cert, tol=tol)
    if as_json:
        _emit_json(report.to_json_dict())
    else:
        if report.verified:
            grade = "exact" if report.identity_exact else report.grade
            click.echo(f"VERIFIED, residual {report.residual_inf_norm:.3g} ({grade})")
        else:
            click.echo(f"FAILED: {report.detail}")
    sys.exit(0 if report.verified else 1)


@main.command()
@click.argument("problem_file")
@click.option("--k-min", type=int, default=None)
@click.option("--k-max", type=int, default=None)
@click.option("--c", "cap", type=float, default=None)
@click.option("--backend", "backend_name", default=None)
@click.option("--json", "as_json", is_flag=True)
def compare(problem_file, k_min, k_max, cap, backend_name, as_json):
    """Standard versus extended bounds per level."""
    problem = _load_problem(problem_file)
    backend = _make_backend(backend_name)
    config = HierarchyConfig(cap=cap, k_min=k_min, k_max=k_max, seed=_seed())
    try:
        table = compare_modes(problem, config, backend)
    except (NoFeasiblePoint, LevelTooSmall) as exc:
        raise InputError(str(exc))
    if as_json:
        _emit_json(table.to_json_dict())
        return
    click.echo(f"{'k':>3s} {'standard':>16s} {'extended':>16s} {'gap':>12s}  flag")
    for row in table.rows:
        gap = "-" if row.gap != row.gap else f"{row.gap:.3e}"
        flag = "standard infeasible, extended feasible" if row.standard_infeasible_extended_feasible else ""
        click.echo(
            f"{row.level:>3d} {_fmt_bound(row.standard_bound):>16s} "
            f"{_fmt_bound(row.extended_bound):>16s} {gap:>12s}  {flag}"
        )


@main.group()
def corpus() -> None:
    """Shipped example problems."""


@corpus.command("list")
def corpus_list() -> None:
    for name in corpus_module.corpus_names():
        problem = corpus_module.load(name)
        click.echo(f"{name:22s} n={problem.n} m={problem.m}  {problem.notes}")


@corpus.command("show")
@click.argument("name")
def corpus_show(name: str) -> None:
    try:
        click.echo(corpus_module.corpus_text(name).rstrip())
    except KeyError as exc:
        raise click.ClickException(str(exc))


@corpus.command("export")
@click.argument("name")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
def corpus_export(name: str, output: str | None) -> None:
    try:
        text = corpus_module.corpus_text(name)
    except KeyError as exc:
        raise click.ClickException(str(exc))
    path = Path(output) if output else Path(f"{name}.json")
    path.write_text(text, encoding="utf-8")
    click.echo(str(path))


if __name__ == "__main__":  # pragma: no cover
    main()

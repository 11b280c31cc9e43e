"""Check suites plus deterministic report serialization.

Every suite unit maps one parameter set to a list of check results; the
JSON rendering is byte-stable for fixed inputs and seed (sorted keys,
rationals as "p/q" strings, floats at 17 significant digits), so reports
can be diffed in CI.  Wall-clock timings are the one volatile field;
consumers comparing runs should drop the timings object first.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import bernstein as bn
from .assembly import (
    assemble,
    check_conformity,
    check_dims,
    check_div_onto,
    infsup_constant,
)
from .checks import FAIL, PASS, CheckResult
from .dofs import INTERIOR, certify_unisolvence
from .mesh import resolve_mesh
from .simplex import reference_simplex
from .spaces import (
    Family,
    decompose,
    verify_bubble_characterization,
    verify_div_image,
)
from .tensors import traceless_gradient_basis

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class CaseParams:
    """One parameter set; picklable so suites can run in worker processes."""

    family: str
    dim: int
    degree: int
    continuity_order: int | None
    mesh: str | None
    frame: str
    seed: int
    samples: int = 2


@dataclass(frozen=True)
class Report:
    schema_version: str
    params: dict
    checks: tuple[CheckResult, ...]
    timings: dict


# ---------------------------------------------------------------------------
# suite units


def unit_decompose(p: CaseParams) -> list[CheckResult]:
    family = Family(p.family)
    basis = decompose(family, reference_simplex(p.dim), p.degree, p.frame)
    expected = family.constrained_dim(p.dim) * bn.space_dim(p.dim, p.degree)
    by_site_dim: dict[str, int] = {}
    for m in basis.members:
        label = f"dim_{m.provenance.sub_simplex.dim}"
        by_site_dim[label] = by_site_dim.get(label, 0) + 1
    ok = len(basis.members) == expected
    return [
        CheckResult(
            name=f"decompose[{family.value} n={p.dim} r={p.degree}]",
            status=PASS if ok else FAIL,
            witness={
                "members": len(basis.members),
                "expected": expected,
                "members_by_site_dim": by_site_dim,
            },
        )
    ]


def unit_unisolvence(p: CaseParams) -> list[CheckResult]:
    cert = certify_unisolvence(
        Family(p.family), p.dim, p.degree, p.continuity_order, p.frame
    )
    witness = {
        "size": cert.size,
        "method": cert.method,
        "block_sizes": [list(b) for b in cert.block_sizes],
        "pivot_hash": cert.pivot_hash,
    }
    if cert.failure is not None:
        witness["failure"] = cert.failure
    return [
        CheckResult(
            name=f"unisolvence[{p.family} n={p.dim} r={p.degree} k={p.continuity_order}]",
            status=PASS if cert.ok else FAIL,
            witness=witness,
        )
    ]


def unit_bubbles(p: CaseParams) -> list[CheckResult]:
    return [
        verify_bubble_characterization(
            Family(p.family), reference_simplex(p.dim), p.degree, p.frame
        )
    ]


def unit_div_image(p: CaseParams) -> list[CheckResult]:
    return [
        verify_div_image(Family(p.family), reference_simplex(p.dim), p.degree, p.frame)
    ]


def unit_dual_basis(p: CaseParams) -> list[CheckResult]:
    frames = traceless_gradient_basis(reference_simplex(p.dim))
    size = len(frames.basis)
    expected = p.dim * p.dim - 1
    identity = all(
        frames.pairing[i][j] == Fraction(int(i == j))
        for i in range(size)
        for j in range(size)
    )
    ok = identity and size == expected
    return [
        CheckResult(
            name=f"traceless_dual_basis[n={p.dim}]",
            status=PASS if ok else FAIL,
            witness={"size": size, "expected": expected, "kronecker": identity},
        )
    ]


def _assembled(p: CaseParams):
    mesh = resolve_mesh(p.mesh)
    k = None if Family(p.family) is Family.LAGRANGE else p.continuity_order
    return assemble(mesh, Family(p.family), p.degree, k)


def unit_assemble(p: CaseParams) -> list[CheckResult]:
    space = _assembled(p)
    scopes: dict[str, int] = {}
    for key in space.keys:
        label = "interior" if key[0] == INTERIOR else (
            "facewise" if key[2] is not None else "shared"
        )
        scopes[label] = scopes.get(label, 0) + 1
    return [
        CheckResult(
            name=f"assemble[{p.family} n={space.mesh.dim} r={p.degree} "
            f"k={space.continuity_order} mesh={p.mesh}]",
            status=PASS,
            witness={"dim": space.dim, "dofs_by_scope": scopes},
        )
    ]


def unit_dims(p: CaseParams) -> list[CheckResult]:
    return [check_dims(_assembled(p))]


def unit_conformity(p: CaseParams) -> list[CheckResult]:
    return [check_conformity(_assembled(p), samples=p.samples, seed=p.seed)]


def unit_infsup(p: CaseParams) -> list[CheckResult]:
    space = _assembled(p)
    return [infsup_constant(space), check_div_onto(space)]


UNITS = {
    "decompose": unit_decompose,
    "unisolvence": unit_unisolvence,
    "bubbles": unit_bubbles,
    "div-image": unit_div_image,
    "dual-basis": unit_dual_basis,
    "assemble": unit_assemble,
    "dims": unit_dims,
    "conformity": unit_conformity,
    "infsup": unit_infsup,
}

MESH_UNITS = ("assemble", "dims", "conformity", "infsup")
DIV_UNITS = ("bubbles", "div-image", "infsup")


def expand_all(p: CaseParams) -> list[str]:
    """The unit names 'all' covers for one parameter set."""
    family = Family(p.family)
    names = ["decompose", "unisolvence"]
    if family is not Family.LAGRANGE:
        names += ["bubbles", "div-image"]
    if family is Family.TRACELESS:
        names.append("dual-basis")
    if p.mesh is not None:
        names += ["assemble", "dims", "conformity"]
        if family is not Family.LAGRANGE:
            names.append("infsup")
    return names


def _run_one(name: str, p: CaseParams) -> tuple[str, list[CheckResult], float]:
    t0 = time.perf_counter()
    checks = UNITS[name](p)
    return name, checks, time.perf_counter() - t0


def run_units(names: list[str], p: CaseParams, jobs: int = 1) -> tuple[list[CheckResult], dict]:
    """Run units, possibly in parallel; results merge in sorted unit order."""
    ordered = sorted(set(names))
    outcomes: dict[str, tuple[list[CheckResult], float]] = {}
    t0 = time.perf_counter()
    if jobs > 1 and len(ordered) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, name, p) for name in ordered]
            for fut in futures:
                name, checks, elapsed = fut.result()
                outcomes[name] = (checks, elapsed)
    else:
        for name in ordered:
            _, checks, elapsed = _run_one(name, p)
            outcomes[name] = (checks, elapsed)
    checks: list[CheckResult] = []
    timings: dict[str, int] = {}
    for name in ordered:
        unit_checks, elapsed = outcomes[name]
        checks.extend(unit_checks)
        timings[name] = int(round(elapsed * 1000))
    timings["total"] = int(round((time.perf_counter() - t0) * 1000))
    return checks, timings


def build_report(subcommand: str, p: CaseParams, checks: list[CheckResult], timings: dict) -> Report:
    params = {
        "subcommand": subcommand,
        "family": p.family,
        "dim": p.dim,
        "degree": p.degree,
        "k": p.continuity_order,
        "mesh": p.mesh,
        "frame": p.frame,
        "seed": p.seed,
        "samples": p.samples,
    }
    return Report(SCHEMA_VERSION, params, tuple(checks), dict(timings))


def report_payload(report: Report) -> dict:
    return {
        "schema_version": report.schema_version,
        "params": report.params,
        "checks": [
            {"name": c.name, "status": c.status, "witness": c.witness}
            for c in report.checks
        ],
        "timings": report.timings,
    }


# ---------------------------------------------------------------------------
# canonical serialization


def canonical_json(value, indent: int = 0, pretty: bool = True) -> str:
    """Deterministic JSON: sorted keys, "p/q" rationals, 17-digit floats."""
    pad = "  " * (indent + 1) if pretty else ""
    close_pad = "  " * indent if pretty else ""
    sep = ",\n" if pretty else ", "
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        return json.dumps(f"{value.numerator}/{value.denominator}")
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            return json.dumps(repr(value))
        return format(value, ".17g")
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [canonical_json(v, indent + 1, pretty) for v in value]
        if pretty:
            return "[\n" + sep.join(pad + it for it in items) + "\n" + close_pad + "]"
        return "[" + sep.join(items) + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = []
        for key in sorted(value):
            if not isinstance(key, str):
                raise TypeError(f"non-string report key: {key!r}")
            items.append(
                json.dumps(key) + ": " + canonical_json(value[key], indent + 1, pretty)
            )
        if pretty:
            return "{\n" + sep.join(pad + it for it in items) + "\n" + close_pad + "}"
        return "{" + sep.join(items) + "}"
    raise TypeError(f"cannot serialize {type(value).__name__} in a report")


def render_json(report: Report) -> str:
    return canonical_json(report_payload(report)) + "\n"


def render_csv(report: Report) -> str:
    """Flat projection: one row per check, context columns repeated."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    context = ["family", "dim", "degree", "k", "mesh", "frame", "seed"]
    writer.writerow(context + ["name", "status", "witness"])
    base = [_csv_cell(report.params.get(c)) for c in context]
    for c in report.checks:
        writer.writerow(
            base + [c.name, c.status, canonical_json(c.witness, pretty=False)]
        )
    return buf.getvalue()


def _csv_cell(value) -> str:
    return "" if value is None else str(value)


def write_atomic(text: str, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    handle = tempfile.NamedTemporaryFile(
        "w", dir=directory, suffix=".part", delete=False
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        if os.path.exists(handle.name):
            os.unlink(handle.name)
        raise


def exit_code(checks: list[CheckResult]) -> int:
    return 1 if any(c.status == FAIL for c in checks) else 0

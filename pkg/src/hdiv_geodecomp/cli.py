"""Command-line driver: run check suites and write machine-readable reports.

Exit codes: 0 when every non-skipped check passes, 1 on check failures,
2 on bad arguments, 3 on internal errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback

from .checks import FAIL, SKIPPED
from .mesh import MeshError, resolve_mesh
from .report import (
    CaseParams,
    build_report,
    exit_code,
    expand_all,
    render_csv,
    render_json,
    run_units,
    write_atomic,
)
from .simplex import FRAME_CONVENTIONS
from .spaces import Family

SUBCOMMANDS = (
    "decompose",
    "unisolvence",
    "bubbles",
    "div-image",
    "assemble",
    "conformity",
    "infsup",
    "dims",
    "all",
)
_NEEDS_MESH = ("assemble", "conformity", "infsup", "dims")
_NEEDS_DIV = ("bubbles", "div-image", "infsup")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdiv-geodecomp",
        description="Exact construction and verification of geometric "
        "decompositions, DoF systems, and assembled spaces.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--family",
        required=True,
        choices=[f.value for f in Family],
        help="value space of the element family",
    )
    common.add_argument("--dim", type=int, help="ambient simplex dimension")
    common.add_argument("--degree", type=int, required=True, help="polynomial degree")
    common.add_argument(
        "--k",
        type=int,
        default=None,
        help="continuity order; default -1 (vector) or 0 (matrix families)",
    )
    common.add_argument("--mesh", help="builtin mesh name or JSON path")
    common.add_argument(
        "--frame",
        default="edge_tangents_face_normals",
        choices=list(FRAME_CONVENTIONS),
        help="tangent/normal frame convention",
    )
    common.add_argument("--out", help="report path; stdout when omitted")
    common.add_argument("--format", default="json", choices=["json", "csv"])
    common.add_argument(
        "--seed", type=int, default=0, help="seed for random rational sample points"
    )
    common.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="parallel workers for independent units (env HDIV_GEODECOMP_JOBS)",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        subs.add_parser(name, parents=[common])
    return parser


def _resolve_case(parser: argparse.ArgumentParser, args) -> CaseParams:
    family = Family(args.family)
    mesh = None
    if args.mesh is not None:
        try:
            mesh = resolve_mesh(args.mesh)
        except MeshError as exc:
            parser.error(f"--mesh: {exc}")
    if args.subcommand in _NEEDS_MESH and mesh is None:
        parser.error(f"{args.subcommand} requires --mesh")
    if args.subcommand in _NEEDS_DIV and family is Family.LAGRANGE:
        parser.error(f"{args.subcommand} applies to the vector/matrix families")
    if mesh is not None:
        if args.dim is not None and args.dim != mesh.dim:
            parser.error(f"--dim {args.dim} contradicts mesh dimension {mesh.dim}")
        dim = mesh.dim
    elif args.dim is not None:
        dim = args.dim
    else:
        parser.error("--dim is required without --mesh")
    if dim < 1:
        parser.error("--dim must be at least 1")

    if family is Family.LAGRANGE:
        if args.k is not None:
            parser.error("--k does not apply to the scalar family")
        if args.degree < 1:
            parser.error("scalar family needs --degree >= 1")
        k = None
    else:
        is_vec = family in (Family.VECTOR_LAGRANGE, Family.FACE)
        k = args.k if args.k is not None else (-1 if is_vec else 0)
        lo = -1 if is_vec else 0
        if not lo <= k <= dim - 2:
            parser.error(
                f"--k {k} outside [{lo}, {dim - 2}] for {family.value} in dimension {dim}"
            )
        if args.degree < (1 if is_vec else 2):
            parser.error(f"{family.value} family needs --degree >= {1 if is_vec else 2}")
    return CaseParams(
        family=family.value,
        dim=dim,
        degree=args.degree,
        continuity_order=k,
        mesh=args.mesh,
        frame=args.frame,
        seed=args.seed,
    )


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        params = _resolve_case(parser, args)
    except SystemExit as exc:
        return 2 if exc.code is None else int(exc.code)
    jobs = args.jobs
    if jobs is None:
        jobs = int(os.environ.get("HDIV_GEODECOMP_JOBS", "1"))
    names = expand_all(params) if args.subcommand == "all" else [args.subcommand]
    try:
        checks, timings = run_units(names, params, jobs)
        seen = [c.name for c in checks]
        if len(set(seen)) != len(seen):
            raise RuntimeError(f"duplicate check names in suite: {sorted(seen)}")
        report = build_report(args.subcommand, params, checks, timings)
        text = render_json(report) if args.format == "json" else render_csv(report)
        if args.out:
            write_atomic(text, args.out)
            failed = sum(c.status == FAIL for c in checks)
            skipped = sum(c.status == SKIPPED for c in checks)
            passed = len(checks) - failed - skipped
            print(
                f"{args.out}: {passed} pass, {failed} fail, {skipped} skipped"
            )
        else:
            sys.stdout.write(text)
    except Exception:
        traceback.print_exc()
        return 3
    return exit_code(checks)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

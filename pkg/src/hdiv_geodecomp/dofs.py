"""Degree-of-freedom families for the decomposed element spaces.

A functional is a sum of terms, each pairing the field with one constant
direction and integrating against one weight polynomial on the functional's
site.  Point values at vertices are the same formula: the integral over a
zero-dimensional site is evaluation.  All values are exact rationals with
the site measure divided out, so the DoF matrix of a basis is a rational
matrix whose invertibility settles unisolvence.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations

from . import bernstein as bn
from . import linalg, tensors
from .checks import FAIL, PASS, CheckResult
from .simplex import (
    Simplex,
    SubSimplexId,
    build_frame,
    enumerate_subsimplices,
    reference_simplex,
)
from .spaces import (
    Family,
    ShapeFunction,
    SpaceBasis,
    bubble_space,
    decompose,
    facet_normal,
    lattice_basis,
)

GLOBAL = "global_on_f"
FACEWISE = "facewise_on_F"
INTERIOR = "interior"

POINT_VALUE = "point_value"
MOMENT = "moment"

MOD_P0 = "mod_P0"
MOD_P1 = "mod_P1"


@dataclass(frozen=True)
class MixedDirection:
    """A tangent/normal pair kept unexpanded; pairs as the outer product."""

    tangent: tuple
    normal: tuple

    def matrix(self) -> tuple:
        return tensors.outer(self.tangent, self.normal)


@dataclass(frozen=True)
class DoFTerm:
    weight: bn.BernsteinPoly  # lives on the functional's site
    direction: object  # vector, matrix, or MixedDirection


@dataclass(frozen=True)
class DoFFunctional:
    site: SubSimplexId
    terms: tuple[DoFTerm, ...]
    kind: str  # POINT_VALUE | MOMENT
    scope: str  # GLOBAL | FACEWISE | INTERIOR
    face: SubSimplexId | None = None  # the facet F of a facewise functional

    def __post_init__(self):
        if (self.scope == FACEWISE) != (self.face is not None):
            raise ValueError("facewise functionals carry their facet, others none")
        for term in self.terms:
            if term.weight.domain != self.site:
                raise ValueError("weight polynomial must live on the site")


def _moment(site, weight, direction, scope, face=None):
    kind = POINT_VALUE if site.dim == 0 else MOMENT
    return DoFFunctional(site, (DoFTerm(weight, direction),), kind, scope, face)


def _direction_matrix(direction):
    if isinstance(direction, MixedDirection):
        return direction.matrix()
    return direction


def _pair(coeff: tuple, direction) -> Fraction:
    d = _direction_matrix(direction)
    if isinstance(d[0], tuple):
        return tensors.frobenius(coeff, d)
    if len(coeff) == 1 and len(d) == 1:
        return coeff[0] * d[0]
    return tensors.dot(coeff, d)


def _poly_key(p: bn.BernsteinPoly):
    return (p.domain.indices, p.degree, tuple(sorted(p.coeffs.items())))


def _site_integral(scalar: bn.BernsteinPoly, weight: bn.BernsteinPoly, site: SubSimplexId, cache: dict | None) -> Fraction:
    key = None
    if cache is not None:
        key = (site.indices, _poly_key(scalar), _poly_key(weight))
        hit = cache.get(key)
        if hit is not None:
            return hit
    restricted = bn.restrict(scalar, site)
    if restricted.is_zero():
        value = Fraction(0)
    else:
        value = bn.integrate(bn.multiply(restricted, weight), site).value
    if cache is not None:
        cache[key] = value
    return value


def apply_functional(functional: DoFFunctional, member: ShapeFunction, cache: dict | None = None) -> Fraction:
    """Exact value of the functional on one shape function, measure divided out."""
    total = Fraction(0)
    for term in functional.terms:
        pairing = _pair(member.coeff, term.direction)
        if pairing:
            total += pairing * _site_integral(member.scalar, term.weight, functional.site, cache)
    return total


@dataclass(frozen=True)
class DoFSet:
    family: Family
    simplex: Simplex
    degree: int
    continuity_order: int | None  # k; None for the scalar family
    frame_convention: str
    functionals: tuple[DoFFunctional, ...]
    merged_faces: tuple[SubSimplexId, ...] = ()

    @property
    def count(self) -> int:
        return len(self.functionals)

    def at_site(self, site: SubSimplexId) -> list[DoFFunctional]:
        return [nf for nf in self.functionals if nf.site == site]

    def sites(self) -> list[SubSimplexId]:
        seen = []
        for nf in self.functionals:
            if nf.site not in seen:
                seen.append(nf.site)
        return seen


_MATRIX_MIN_DEGREE = 2


def _k_range(family: Family, n: int) -> tuple[int, int]:
    lo = -1 if family in (Family.VECTOR_LAGRANGE, Family.FACE) else 0
    return lo, n - 2


def _validate_params(family: Family, n: int, degree: int, k: int | None) -> None:
    if family is Family.LAGRANGE:
        if degree < 1:
            raise ValueError("scalar moments need degree >= 1")
        if k is not None:
            raise ValueError("the scalar family carries no continuity order")
        return
    if family in (Family.TRACELESS, Family.SYMMETRIC):
        if degree < _MATRIX_MIN_DEGREE:
            raise ValueError(
                f"{family.value} DoFs need degree >= {_MATRIX_MIN_DEGREE}, got {degree}"
            )
    elif degree < 1:
        raise ValueError("vector DoFs need degree >= 1")
    lo, hi = _k_range(family, n)
    if k is None or not lo <= k <= hi:
        raise ValueError(
            f"continuity order {k} outside [{lo}, {hi}] for {family.value} in dimension {n}"
        )


def _vertex_directions(family: Family, frame) -> list:
    """A basis of the constrained space attached to one vertex's frame."""
    if family in (Family.VECTOR_LAGRANGE, Family.FACE):
        return list(frame.normals)
    split = tensors.tn_split(frame.sub_simplex, frame, family.space_tag)
    return list(split.normal_basis)


def _cartesian(n: int) -> list[tuple]:
    return [tuple(Fraction(int(i == d)) for i in range(n)) for d in range(n)]


def build_dofs(family: Family, simplex: Simplex | int, degree: int, continuity_order: int | None, frame_convention: str = "edge_tangents_face_normals", frames=None, facet_normals=None) -> DoFSet:
    """The moment functionals of one element, grouped by site, interior last.

    Boundary sites of dimension at most the continuity order carry globally
    oriented moments; higher-dimensional boundary sites carry one moment set
    per containing facet (plus, for symmetric values, global normal-normal
    moments); the interior block pairs against the div bubble space.

    frames and facet_normals optionally override the element-local frame and
    facet-normal construction; mesh assembly passes shared vectors through
    them so that two cells meeting at a site emit identical functionals.
    """
    if isinstance(simplex, int):
        simplex = reference_simplex(simplex)
    n = simplex.dim
    k = continuity_order
    _validate_params(family, n, degree, k)
    is_vec = family in (Family.VECTOR_LAGRANGE, Family.FACE)
    units = _cartesian(n)
    out: list[DoFFunctional] = []

    for ell in range(n):
        for f in enumerate_subsimplices(n, ell):
            monos = bn.monomial_basis(f, degree - ell - 1)
            if not monos:
                continue
            if family is Family.LAGRANGE:
                out.extend(_moment(f, m, (Fraction(1),), GLOBAL) for m in monos)
                continue
            if frames is not None:
                frame = frames(f)
            else:
                frame = build_frame(simplex, f, frame_convention)
            if ell == 0 and not is_vec:
                directions = _vertex_directions(family, frame)
                out.extend(_moment(f, m, d, GLOBAL) for m in monos for d in directions)
                continue
            if ell <= k:
                if is_vec:
                    out.extend(
                        _moment(f, m, nrm, GLOBAL)
                        for m in monos
                        for nrm in frame.normals
                    )
                elif family is Family.TRACELESS:
                    out.extend(
                        _moment(f, m, tensors.outer(e, nrm), GLOBAL)
                        for m in monos
                        for nrm in frame.normals
                        for e in units
                    )
                else:
                    out.extend(_symmetric_global(f, frame, monos))
                continue
            if family is Family.SYMMETRIC:
                nn = frame.normals
                out.extend(
                    _moment(f, m, tensors.outer(nn[j], nn[i]), GLOBAL)
                    for m in monos
                    for i in range(len(nn))
                    for j in range(i, len(nn))
                )
            for face in f.faces_containing():
                if facet_normals is not None:
                    n_face = facet_normals(face)
                else:
                    n_face = facet_normal(simplex, face)
                if is_vec:
                    out.extend(_moment(f, m, n_face, FACEWISE, face) for m in monos)
                elif family is Family.TRACELESS:
                    out.extend(
                        _moment(f, m, tensors.outer(e, n_face), FACEWISE, face)
                        for m in monos
                        for e in units
                    )
                else:
                    out.extend(
                        _moment(f, m, MixedDirection(t, n_face), FACEWISE, face)
                        for m in monos
                        for t in frame.tangents
                    )

    full = bn.full_domain(n)
    if family is Family.LAGRANGE:
        out.extend(
            _moment(full, m, (Fraction(1),), INTERIOR)
            for m in bn.monomial_basis(full, degree - n - 1)
        )
    else:
        for b in bubble_space(family, simplex, degree, frame_convention).members:
            out.append(DoFFunctional(full, (DoFTerm(b.scalar, b.coeff),), MOMENT, INTERIOR))

    dofs = DoFSet(family, simplex, degree, k, frame_convention, tuple(out))
    expected = family.constrained_dim(n) * bn.space_dim(n, degree)
    if dofs.count != expected:
        raise AssertionError(
            f"DoF count {dofs.count} != space dimension {expected} for "
            f"{family.value} n={n} r={degree} k={k}"
        )
    return dofs


def _symmetric_global(f: SubSimplexId, frame, monos) -> list[DoFFunctional]:
    """Independent global moments on a low-dimensional site, symmetric values.

    Pairing with every ambient direction would duplicate the two mixed
    normal-normal moments of a symmetric field, so the directions mirror the
    normal component basis: every tangent against every normal, and normal
    pairs taken once with the second index at least the first.
    """
    out = []
    for m in monos:
        for j, nrm in enumerate(frame.normals):
            out.extend(
                _moment(f, m, tensors.outer(t, nrm), GLOBAL) for t in frame.tangents
            )
            out.extend(
                _moment(f, m, tensors.outer(frame.normals[i], nrm), GLOBAL)
                for i in range(j + 1)
            )
    return out


def dof_matrix(dofs: DoFSet, basis: SpaceBasis, cache: dict | None = None) -> list[list[Fraction]]:
    """Square matrix N_i(phi_j) of the functionals against the basis."""
    if basis.family.space_tag is not dofs.family.space_tag or basis.n != dofs.simplex.dim or basis.degree != dofs.degree:
        raise ValueError("DoF set and basis describe different spaces")
    if dofs.count != len(basis.members):
        raise ValueError(
            f"count mismatch: {dofs.count} functionals vs {len(basis.members)} members"
        )
    if cache is None:
        cache = {}
    return [
        [apply_functional(nf, m, cache) for m in basis.members]
        for nf in dofs.functionals
    ]


@dataclass(frozen=True)
class UnisolvenceCertificate:
    family: str
    n: int
    degree: int
    continuity_order: int | None
    frame_convention: str
    size: int
    invertible: bool
    method: str  # "site_blocks" | "dense"
    block_sizes: tuple[tuple[str, int], ...]
    pivot_hash: str
    failure: dict | None = None

    @property
    def ok(self) -> bool:
        return self.invertible


def _site_label(site: SubSimplexId, interior: bool) -> str:
    return "interior" if interior else "f" + "".join(str(i) for i in site.indices)


def _row_blocks(dofs: DoFSet) -> list[tuple[str, list[int]]]:
    blocks: list[tuple[str, list[int]]] = []
    for idx, nf in enumerate(dofs.functionals):
        label = _site_label(nf.site, nf.scope == INTERIOR)
        if blocks and blocks[-1][0] == label:
            blocks[-1][1].append(idx)
        else:
            blocks.append((label, [idx]))
    return blocks


def _column_blocks(dofs: DoFSet, basis: SpaceBasis) -> list[tuple[str, list[int]]] | None:
    """Columns grouped to match the row blocks; None if shapes disagree.

    Boundary blocks take the non-tangential members of their own site; the
    interior block takes every tangential member plus whatever sits on the
    full simplex.  Tangential members vanish under every boundary functional,
    which is what makes the blocked elimination equivalent to the dense one.
    """
    order = {label: pos for pos, (label, _) in enumerate(_row_blocks(dofs))}
    placed: dict[str, list[int]] = {label: [] for label in order}
    for col, member in enumerate(basis.members):
        f = member.provenance.sub_simplex
        interior = member.provenance.component == "tangential" or f.dim == f.parent_dim
        label = "interior" if interior else _site_label(f, False)
        if label not in placed:
            return None
        placed[label].append(col)
    return [(label, placed[label]) for label in order]


def certify_unisolvence(
    family: Family | None = None,
    simplex: Simplex | int | None = None,
    degree: int | None = None,
    continuity_order: int | None = None,
    frame_convention: str = "edge_tangents_face_normals",
    dofs: DoFSet | None = None,
    method: str | None = None,
) -> UnisolvenceCertificate:
    """Exact invertibility certificate for the DoF matrix of one element.

    The default path eliminates one diagonal block per site after checking
    that every block above the diagonal is exactly zero; merged DoF sets
    fall back to dense elimination, where the annihilation pattern no longer
    aligns with single sites.
    """
    if dofs is None:
        if family is None or simplex is None or degree is None:
            raise ValueError("pass either a DoF set or (family, simplex, degree, k)")
        dofs = build_dofs(family, simplex, degree, continuity_order, frame_convention)
    basis = decompose(dofs.family, dofs.simplex, dofs.degree, dofs.frame_convention)
    if method is None:
        method = "dense" if dofs.merged_faces else "site_blocks"
    matrix = dof_matrix(dofs, basis)
    size = len(matrix)
    params = (
        dofs.family.value,
        dofs.simplex.dim,
        dofs.degree,
        dofs.continuity_order,
        dofs.frame_convention,
    )

    if method == "dense":
        data = linalg.echelon_data(matrix)
        return UnisolvenceCertificate(
            *params,
            size=size,
            invertible=data.rank == size,
            method="dense",
            block_sizes=(("dense", size),),
            pivot_hash=data.trace_hash(),
            failure=None if data.rank == size else {"rank": data.rank, "size": size},
        )

    rows = _row_blocks(dofs)
    cols = _column_blocks(dofs, basis)
    if cols is None or [len(r) for _, r in rows] != [len(c) for _, c in cols]:
        raise AssertionError("site blocks do not tile the DoF matrix")
    for bi, (row_label, row_idx) in enumerate(rows):
        for col_label, col_idx in cols[bi + 1 :]:
            for i in row_idx:
                for j in col_idx:
                    if matrix[i][j]:
                        raise AssertionError(
                            f"functional at {row_label} does not annihilate "
                            f"member block {col_label}"
                        )

    digest = hashlib.sha256()
    block_sizes = []
    for (label, row_idx), (_, col_idx) in zip(rows, cols):
        block = [[matrix[i][j] for j in col_idx] for i in row_idx]
        data = linalg.echelon_data(block)
        digest.update(f"{label}:{data.trace_hash()};".encode())
        block_sizes.append((label, len(row_idx)))
        if data.rank != len(row_idx):
            return UnisolvenceCertificate(
                *params,
                size=size,
                invertible=False,
                method="site_blocks",
                block_sizes=tuple(block_sizes),
                pivot_hash=digest.hexdigest(),
                failure={"block": label, "rank": data.rank, "size": len(row_idx)},
            )
    return UnisolvenceCertificate(
        *params,
        size=size,
        invertible=True,
        method="site_blocks",
        block_sizes=tuple(block_sizes),
        pivot_hash=digest.hexdigest(),
    )


def _bubble_on(domain: SubSimplexId, f: SubSimplexId) -> bn.BernsteinPoly:
    alpha = tuple(int(label in f.indices) for label in domain.indices)
    return bn.monomial(domain, alpha)


def _face_bubble_collection(F: SubSimplexId, degree: int, k: int) -> list[bn.BernsteinPoly]:
    """b_f * P_{degree-l-1}(f) over the sub-simplices of F of dimension > k."""
    out = []
    for ell in range(k + 1, F.dim + 1):
        for labels in _subsets(F.indices, ell + 1):
            f = SubSimplexId(labels, F.parent_dim)
            b = _bubble_on(F, f)
            out.extend(
                bn.multiply(b, bn.extend(m, F)) for m in bn.monomial_basis(f, degree - ell - 1)
            )
    return out


def _subsets(labels: tuple[int, ...], size: int):
    return combinations(labels, size)


@dataclass(frozen=True)
class QuotientFaceSpace:
    face: SubSimplexId
    degree: int
    continuity_order: int
    mode: str
    complement: tuple[bn.BernsteinPoly, ...]  # orthogonal to the fixed part
    fixed_part: tuple[bn.BernsteinPoly, ...]  # P_0 or P_1 on the face

    @property
    def full_basis(self) -> tuple[bn.BernsteinPoly, ...]:
        return self.complement + self.fixed_part


def quotient_face_space(F: SubSimplexId, degree: int, continuity_order: int, mode: str) -> QuotientFaceSpace:
    """Orthogonal complement of P_s inside the facet bubble collection, plus P_s.

    The collection spans the facet polynomials not reachable by moments on
    sub-simplices of dimension at most the continuity order; splitting off
    P_s exactly (rational Gram solve) and re-adjoining it yields the weight
    space of the merged facet moment.  Unisolvence of the associated scalar
    moment set is certified by exact rank before returning.
    """
    if mode not in (MOD_P0, MOD_P1):
        raise ValueError(f"unknown quotient mode {mode!r}")
    k = continuity_order
    dim_F = F.dim
    if not -1 <= k <= dim_F - 1:
        raise ValueError(f"continuity order {k} outside [-1, {dim_F - 1}]")
    s = 0 if mode == MOD_P0 else 1
    min_degree = k + 3 if (mode == MOD_P1 and k == dim_F - 1) else k + 2
    if degree < min_degree:
        raise ValueError(
            f"{mode} quotient on a {dim_F}-face needs degree >= {min_degree}, got {degree}"
        )

    bubbles = _face_bubble_collection(F, degree, k)
    if s == 0:
        fixed = [bn.one(F)]
    else:
        fixed = [bn.barycentric(F, label) for label in F.indices]
    gram = [[bn.integrate(bn.multiply(q, b), F).value for b in bubbles] for q in fixed]
    if linalg.rank(gram) != len(fixed):
        raise AssertionError(f"P_{s} is not resolved by the bubble collection on {F.indices}")
    combos = linalg.nullspace(gram, cols=len(bubbles))
    complement = []
    for combo in combos:
        poly = bn.zero(F)
        for c, b in zip(combo, bubbles):
            if c:
                poly = poly + c * b
        complement.append(poly)

    _certify_face_moments(F, degree, k, tuple(complement) + tuple(fixed))
    return QuotientFaceSpace(F, degree, k, mode, tuple(complement), tuple(fixed))


def _certify_face_moments(F: SubSimplexId, degree: int, k: int, face_weights) -> None:
    """Exact-rank unisolvence of low moments plus facet moments on P_degree(F)."""
    columns = bn.monomial_basis(F, degree)
    rows = []
    for ell in range(k + 1):
        for labels in _subsets(F.indices, ell + 1):
            f = SubSimplexId(labels, F.parent_dim)
            for m in bn.monomial_basis(f, degree - ell - 1):
                rows.append(
                    [bn.integrate(bn.multiply(bn.restrict(v, f), m), f).value for v in columns]
                )
    for w in face_weights:
        rows.append([bn.integrate(bn.multiply(v, w), F).value for v in columns])
    if len(rows) != len(columns) or linalg.rank(rows) != len(columns):
        raise AssertionError(
            f"face moment system on {F.indices} is not unisolvent "
            f"(degree {degree}, continuity order {k})"
        )


def tangential_polynomial_fields(simplex: Simplex, F: SubSimplexId, degree: int, frame_convention: str = "edge_tangents_face_normals") -> list[tuple]:
    """Facet-tangent fields q of degree `degree`+1 with q.x of degree `degree`+1.

    Fields are returned as per-tangent scalar weights against the facet frame
    tangents.  In the frame's edge chart the position coordinates are the
    barycentric functions of the non-base vertices, so the degree condition
    on q.x is a rational rank computation with no geometry in it.
    """
    r1 = degree + 1  # component degree of the field
    frame = build_frame(simplex, F, frame_convention)
    monos = bn.monomial_basis(F, r1)
    elevated = [bn.coeff_vector(m, r1 + 1) for m in monos]
    annihilator = linalg.nullspace(elevated, cols=bn.space_dim(F.dim, r1 + 1))
    candidates = []
    for t_pos in range(len(frame.tangents)):
        chart = bn.barycentric(F, F.indices[t_pos + 1])
        for m in monos:
            candidates.append((t_pos, m, bn.coeff_vector(bn.multiply(m, chart), r1 + 1)))
    constraint = [
        [tensors.dot(vec, z) for _, _, vec in candidates] for z in annihilator
    ]
    combos = linalg.nullspace(constraint, cols=len(candidates))
    fields = []
    for combo in combos:
        weights = [bn.zero(F) for _ in frame.tangents]
        for c, (t_pos, m, _) in zip(combo, candidates):
            if c:
                weights[t_pos] = weights[t_pos] + c * m
        fields.append(tuple(weights))
    return fields


@dataclass(frozen=True)
class MergedFaceDoFs:
    dofs: DoFSet
    face: SubSimplexId
    removed: tuple[DoFFunctional, ...]
    added: tuple[DoFFunctional, ...]
    span_check: CheckResult


def merge_face_dofs(dofs: DoFSet, F: SubSimplexId) -> MergedFaceDoFs:
    """Replace the per-sub-simplex facewise moments on one facet.

    Vector moments collapse to plain facet moments (full P_r for the least
    continuous variant, the quotient weights otherwise), traceless moments to
    the quotient weights in every ambient direction, and the symmetric mixed
    moments to facet-tangential polynomial fields paired with the facet
    normal.  Span equality against the retained functionals on the facet is
    asserted by exact rank before the new set is returned.
    """
    family = dofs.family
    simplex = dofs.simplex
    n = simplex.dim
    if F.dim != n - 1 or F.parent_dim != n:
        raise ValueError("merging happens on one facet of the element")
    if family is Family.LAGRANGE:
        raise ValueError("the scalar family has no facewise functionals")
    if F in dofs.merged_faces:
        raise ValueError(f"facet {F.indices} already merged")
    old = tuple(nf for nf in dofs.functionals if nf.scope == FACEWISE and nf.face == F)
    if not old:
        raise ValueError(f"no facewise functionals on facet {F.indices}")
    k = dofs.continuity_order
    r = dofs.degree
    n_face = facet_normal(simplex, F)
    is_vec = family in (Family.VECTOR_LAGRANGE, Family.FACE)

    added: list[DoFFunctional] = []
    if is_vec:
        if k == -1:
            weights = bn.monomial_basis(F, r)
        else:
            weights = quotient_face_space(F, r, k, MOD_P0).full_basis
        added = [_moment(F, w, n_face, FACEWISE, F) for w in weights]
    elif family is Family.TRACELESS:
        weights = quotient_face_space(F, r, k, MOD_P1).full_basis
        units = _cartesian(n)
        added = [
            _moment(F, w, tensors.outer(e, n_face), FACEWISE, F)
            for w in weights
            for e in units
        ]
    else:
        if k != 0:
            raise ValueError("the symmetric merge is stated for continuity order 0")
        frame = build_frame(simplex, F, dofs.frame_convention)
        for field in tangential_polynomial_fields(simplex, F, r - 2, dofs.frame_convention):
            terms = tuple(
                DoFTerm(w, MixedDirection(t, n_face))
                for w, t in zip(field, frame.tangents)
                if not w.is_zero()
            )
            added.append(DoFFunctional(F, terms, MOMENT, FACEWISE, F))

    if len(added) != len(old):
        raise AssertionError(
            f"merged facet set has {len(added)} functionals, expected {len(old)}"
        )
    check = _span_equality_on_facet(dofs, F, old, tuple(added))
    if check.status != PASS:
        raise AssertionError(f"merged facet moments change the span: {check.witness}")

    kept = [nf for nf in dofs.functionals if not (nf.scope == FACEWISE and nf.face == F)]
    combined = kept + added
    combined.sort(key=lambda nf: (nf.site.dim, nf.site.indices))
    merged = replace(
        dofs,
        functionals=tuple(combined),
        merged_faces=dofs.merged_faces + (F,),
    )
    return MergedFaceDoFs(merged, F, old, tuple(added), check)


def _span_equality_on_facet(dofs: DoFSet, F: SubSimplexId, old, new) -> CheckResult:
    """rank(context+old) == rank(context+new) == rank(all) on the element space."""
    context = [
        nf
        for nf in dofs.functionals
        if nf.scope == GLOBAL and F.contains(nf.site)
    ]
    basis = lattice_basis(dofs.family, dofs.simplex, dofs.degree)
    cache: dict = {}

    def rows(functionals):
        return [
            [apply_functional(nf, m, cache) for m in basis.members]
            for nf in functionals
        ]

    base = rows(context)
    old_rows = rows(old)
    new_rows = rows(new)
    rank_old = linalg.rank(base + old_rows)
    rank_new = linalg.rank(base + new_rows)
    rank_all = linalg.rank(base + old_rows + new_rows)
    status = PASS if rank_old == rank_new == rank_all else FAIL
    return CheckResult(
        f"facet_merge_span[{dofs.family.value},f={''.join(map(str, F.indices))}]",
        status,
        {
            "rank_with_old": rank_old,
            "rank_with_new": rank_new,
            "rank_with_both": rank_all,
            "context": len(context),
            "facewise": len(old),
        },
    )


def merge_all_faces(dofs: DoFSet) -> DoFSet:
    """Apply the facet merge on every facet; convenience for whole elements."""
    out = dofs
    for F in enumerate_subsimplices(dofs.simplex.dim, dofs.simplex.dim - 1):
        if any(nf.scope == FACEWISE and nf.face == F for nf in out.functionals):
            out = merge_face_dofs(out, F).dofs
    return out

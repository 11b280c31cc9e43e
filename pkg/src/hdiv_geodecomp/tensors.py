"""Constrained matrix spaces and their tangent-normal decompositions.

Matrices act on face normals through their second tensor slot:
(u ⊗ v)·n = u (v·n).  A basis element is "tangential" at a sub-simplex f
when that contraction vanishes for the normals of every face containing f,
which is what lets the tangential pieces become bubbles downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from . import linalg
from .simplex import Frame, Simplex, SubSimplexId, barycentric_gradients, dot

Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]


class SpaceTag(Enum):
    VECTOR = "vector"
    FULL = "full"
    TRACELESS = "traceless"
    SYMMETRIC = "symmetric"

    def dim(self, n: int) -> int:
        if self is SpaceTag.VECTOR:
            return n
        if self is SpaceTag.FULL:
            return n * n
        if self is SpaceTag.TRACELESS:
            return n * n - 1
        return n * (n + 1) // 2

    def value_width(self, n: int) -> int:
        """Components of one value: n for vectors, n² for matrices."""
        return n if self is SpaceTag.VECTOR else n * n


def as_vec(x: Sequence) -> Vec:
    return tuple(Fraction(v) for v in x)


def as_mat(rows: Sequence[Sequence]) -> Mat:
    return tuple(as_vec(r) for r in rows)


def outer(u: Sequence, v: Sequence) -> Mat:
    return tuple(tuple(Fraction(a) * Fraction(b) for b in v) for a in u)


def transpose(a: Mat) -> Mat:
    return tuple(zip(*a))


def trace(a: Mat) -> Fraction:
    _require_square(a)
    return sum((a[i][i] for i in range(len(a))), Fraction(0))


def sym(a: Mat) -> Mat:
    _require_square(a)
    n = len(a)
    return tuple(
        tuple((a[i][j] + a[j][i]) / 2 for j in range(n)) for i in range(n)
    )


def dev(a: Mat) -> Mat:
    """Trace-free part A − (trace A / n) I."""
    _require_square(a)
    n = len(a)
    shift = trace(a) / n
    return tuple(
        tuple(a[i][j] - (shift if i == j else 0) for j in range(n)) for i in range(n)
    )


def _require_square(a: Mat) -> None:
    if any(len(row) != len(a) for row in a):
        raise ValueError("matrix must be square")


def mat_vec(a: Mat, x: Sequence) -> Vec:
    return tuple(dot(row, x) for row in a)


def mat_add(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(a: Mat, c) -> Mat:
    c = Fraction(c)
    return tuple(tuple(c * x for x in row) for row in a)


def frobenius(a: Mat, b: Mat) -> Fraction:
    return sum(
        (x * y for ra, rb in zip(a, b) for x, y in zip(ra, rb)), Fraction(0)
    )


def identity(n: int) -> Mat:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def flatten(value) -> tuple[Fraction, ...]:
    """Components of a vector or (row-major) matrix value."""
    if value and isinstance(value[0], tuple):
        return tuple(x for row in value for x in row)
    return tuple(value)


@dataclass(frozen=True)
class NormalFlags:
    """Bookkeeping for one normal-component basis element."""

    free_column: bool
    active_constraint_representative: bool


@dataclass(frozen=True)
class TnSplit:
    """Tangential/normal basis of a constrained space at one sub-simplex."""

    sub_simplex: SubSimplexId
    space: SpaceTag
    tangential_basis: tuple
    normal_basis: tuple
    normal_flags: tuple[NormalFlags, ...]


def _corrected(u: Vec, v: Vec, direction: Mat, direction_norm: Fraction) -> Mat:
    weight = dot(u, v) / direction_norm
    return mat_add(outer(u, v), mat_scale(direction, -weight))


def tn_split(f: SubSimplexId, frame: Frame, space: SpaceTag) -> TnSplit:
    """Split the tagged space into tangential and normal parts at f.

    Tangential elements have zero contraction with every face normal of
    faces containing f; for the constrained spaces the diagonal blocks are
    corrected along t₁⊗t₁ (n₁⊗n₁ at vertices, where no tangent exists) to
    restore the trace or symmetry constraint, scaled by the exact squared
    length of the correction direction since frames are not unit vectors.
    """
    if frame.sub_simplex != f:
        raise ValueError("frame does not belong to this sub-simplex")
    n = f.parent_dim
    ell = f.dim
    tans = frame.tangents
    nors = frame.normals
    if space is SpaceTag.VECTOR:
        flags = tuple(NormalFlags(True, False) for _ in nors)
        return TnSplit(f, space, tans, nors, flags)
    if space is SpaceTag.FULL:
        slots = tans + nors
        tangential = tuple(outer(w, t) for w in slots for t in tans)
        normal = tuple(outer(w, m) for w in slots for m in nors)
        flags = tuple(NormalFlags(True, False) for _ in normal)
        return TnSplit(f, space, tangential, normal, flags)
    if space is SpaceTag.TRACELESS:
        if ell >= 1:
            direction = outer(tans[0], tans[0])
            norm = dot(tans[0], tans[0])
            tangential = [outer(m, t) for m in nors for t in tans]
            tangential += [
                _corrected(tans[i], tans[j], direction, norm)
                for i in range(ell)
                for j in range(ell)
                if (i, j) != (0, 0)
            ]
            normal = [outer(t, m) for t in tans for m in nors]
            normal += [
                _corrected(nors[i], nors[j], direction, norm)
                for i in range(n - ell)
                for j in range(n - ell)
            ]
            free = True
        else:
            direction = outer(nors[0], nors[0])
            norm = dot(nors[0], nors[0])
            tangential = []
            normal = [
                _corrected(nors[i], nors[j], direction, norm)
                for i in range(n)
                for j in range(n)
                if (i, j) != (0, 0)
            ]
            free = False
        flags = tuple(NormalFlags(free, False) for _ in normal)
        return TnSplit(f, space, tuple(tangential), tuple(normal), flags)
    if space is SpaceTag.SYMMETRIC:
        tangential = [
            sym(outer(tans[i], tans[j]))
            for i in range(ell)
            for j in range(i, ell)
        ]
        normal = []
        flags = []
        free = (n - ell) == 1
        for t in tans:
            for m in nors:
                normal.append(sym(outer(t, m)))
                flags.append(NormalFlags(free, False))
        for i in range(n - ell):
            for j in range(i, n - ell):
                normal.append(sym(outer(nors[i], nors[j])))
                flags.append(NormalFlags(free, i != j))
        return TnSplit(f, space, tuple(tangential), tuple(normal), tuple(flags))
    raise ValueError(f"unsupported space {space!r}")


@dataclass(frozen=True)
class TracelessGradientBasis:
    """Gradient-aligned basis of the traceless matrices, with its dual."""

    index_pairs: tuple[tuple[int, int], ...]
    basis: tuple[Mat, ...]
    dual: tuple[Mat, ...]
    pairing: tuple[tuple[Fraction, ...], ...]


def traceless_gradient_basis(simplex: Simplex) -> TracelessGradientBasis:
    """Basis {∇λ_i ⊗ t_{i+1,j}} of the traceless matrices and its dual.

    Index pairs run over i = 0..n and j outside {i, i+1}, successor read
    cyclically over the n+1 vertex labels.  The duals are t_{j,i} ⊗ ∇λ_j
    shifted by I/n; the Frobenius pairing matrix is returned so callers can
    assert it is the identity.
    """
    n = simplex.dim
    grads = barycentric_gradients(simplex)
    eye_over_n = mat_scale(identity(n), Fraction(1, n))
    pairs = []
    basis = []
    dual = []
    for i in range(n + 1):
        succ = (i + 1) % (n + 1)
        for j in range(n + 1):
            if j in (i, succ):
                continue
            pairs.append((i, j))
            basis.append(outer(grads[i], simplex.edge_vector(succ, j)))
            dual.append(mat_add(outer(simplex.edge_vector(j, i), grads[j]), eye_over_n))
    pairing = tuple(tuple(frobenius(d, b) for b in basis) for d in dual)
    return TracelessGradientBasis(tuple(pairs), tuple(basis), tuple(dual), pairing)


@dataclass(frozen=True)
class AffineField:
    """Vector field x ↦ A x + b with rational coefficients."""

    matrix: Mat
    offset: Vec

    def __call__(self, x: Sequence) -> Vec:
        moved = mat_vec(self.matrix, x)
        return tuple(m + o for m, o in zip(moved, self.offset))


def _field_from_params(n: int, params: Sequence[Fraction]) -> AffineField:
    mat = tuple(tuple(params[i * n + j] for j in range(n)) for i in range(n))
    return AffineField(mat, tuple(params[n * n :]))


def rigid_spaces(n: int) -> tuple[list[AffineField], list[AffineField]]:
    """(RT, RM): scalings-plus-translations, and the rigid motions.

    RT = {a x + b} with scalar a.  RM is computed, not assumed: it is the
    exact kernel of the symmetrized jacobian on affine fields, which comes
    out as {b + W x, W skew} of dimension n(n+1)/2.
    """
    if n < 1:
        raise ValueError("ambient dimension must be at least 1")
    zero_mat = tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n))
    rt = [
        AffineField(zero_mat, tuple(Fraction(int(i == d)) for i in range(n)))
        for d in range(n)
    ]
    rt.append(AffineField(identity(n), tuple(Fraction(0) for _ in range(n))))
    # Rows: upper-triangular entries of sym(A); columns: (A row-major, b).
    rows = []
    for i in range(n):
        for j in range(i, n):
            row = [Fraction(0)] * (n * n + n)
            row[i * n + j] += Fraction(1, 2)
            row[j * n + i] += Fraction(1, 2)
            rows.append(row)
    rm = [_field_from_params(n, ker) for ker in linalg.nullspace(rows)]
    return rt, rm

"""Simplex combinatorics, barycentric gradients, and tangent-normal frames."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache
from math import factorial
from typing import Sequence

from . import linalg

Vector = tuple[Fraction, ...]

FRAME_CONVENTIONS = ("edge_tangents_face_normals", "orthogonalized", "face_normal_basis")


class SingularGeometryError(ValueError):
    """Raised for affinely dependent vertex sets."""


def _as_point(coords: Sequence) -> Vector:
    return tuple(Fraction(x) for x in coords)


@dataclass(frozen=True)
class SubSimplexId:
    """A sub-simplex of an n-simplex, named by its vertex labels."""

    indices: tuple[int, ...]
    parent_dim: int

    def __post_init__(self):
        n = self.parent_dim
        idx = self.indices
        if not idx or any(i < 0 or i > n for i in idx):
            raise ValueError(f"labels {idx} outside 0..{n}")
        if list(idx) != sorted(set(idx)):
            raise ValueError(f"labels {idx} must be strictly increasing")

    @property
    def dim(self) -> int:
        return len(self.indices) - 1

    def complement(self) -> "SubSimplexId | None":
        rest = tuple(i for i in range(self.parent_dim + 1) if i not in self.indices)
        if not rest:
            return None
        return SubSimplexId(rest, self.parent_dim)

    def complement_labels(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.parent_dim + 1) if i not in self.indices)

    def contains(self, other: "SubSimplexId") -> bool:
        return set(other.indices) <= set(self.indices)

    def faces_containing(self) -> tuple["SubSimplexId", ...]:
        """The facets F_i ⊇ f; one for each label i outside f."""
        n = self.parent_dim
        out = []
        for i in self.complement_labels():
            rest = tuple(j for j in range(n + 1) if j != i)
            out.append(SubSimplexId(rest, n))
        return tuple(out)


def enumerate_subsimplices(n: int, ell: int) -> list[SubSimplexId]:
    """All C(n+1, ℓ+1) sub-simplices of dimension ℓ, lexicographically."""
    if not 0 <= ell <= n:
        raise ValueError(f"sub-simplex dimension {ell} outside 0..{n}")
    return [SubSimplexId(c, n) for c in itertools.combinations(range(n + 1), ell + 1)]


def complement(f: SubSimplexId) -> SubSimplexId | None:
    return f.complement()


@dataclass(frozen=True)
class Simplex:
    """A nondegenerate n-simplex with exact rational vertex coordinates."""

    vertices: tuple[Vector, ...]

    def __post_init__(self):
        pts = tuple(_as_point(v) for v in self.vertices)
        object.__setattr__(self, "vertices", pts)
        n = len(pts) - 1
        if n < 1 or any(len(p) != n for p in pts):
            raise ValueError("need n+1 vertices with n coordinates each")
        edges = [[pts[j][d] - pts[0][d] for d in range(n)] for j in range(1, n + 1)]
        if linalg.det(edges) == 0:
            raise SingularGeometryError("vertices are affinely dependent")

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def edge_vector(self, i: int, j: int) -> Vector:
        """The vector t_{i,j} from vertex i to vertex j."""
        vi, vj = self.vertices[i], self.vertices[j]
        return tuple(b - a for a, b in zip(vi, vj))

    def volume(self) -> Fraction:
        n = self.dim
        edges = [list(self.edge_vector(0, j)) for j in range(1, n + 1)]
        return abs(linalg.det(edges)) / factorial(n)

    def sub_simplex(self, labels: Sequence[int]) -> SubSimplexId:
        return SubSimplexId(tuple(labels), self.dim)


def reference_simplex(n: int) -> Simplex:
    pts = [tuple(Fraction(0) for _ in range(n))]
    for d in range(n):
        pts.append(tuple(Fraction(int(i == d)) for i in range(n)))
    return Simplex(tuple(pts))


@cache
def barycentric_gradients(simplex: Simplex) -> tuple[Vector, ...]:
    """Gradients ∇λ₀..∇λ_n of the barycentric coordinates, exact.

    Solves the interpolation system λ_i(v_j) = δ_ij over affine functions.
    """
    n = simplex.dim
    system = [list(v) + [Fraction(1)] for v in simplex.vertices]
    eye = [[Fraction(int(i == j)) for j in range(n + 1)] for i in range(n + 1)]
    try:
        cols = linalg.solve_many(system, eye)
    except linalg.SingularMatrixError as exc:
        raise SingularGeometryError(str(exc)) from exc
    return tuple(tuple(col[:n]) for col in cols)


def max_normalized(vec: Sequence[Fraction]) -> Vector:
    """Rescale so the largest-magnitude entry is ±1, keeping direction."""
    top = max(abs(x) for x in vec)
    if top == 0:
        raise ValueError("cannot normalize the zero vector")
    return tuple(Fraction(x) / top for x in vec)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _gram_schmidt(vectors: Sequence[Vector]) -> list[Vector]:
    ortho: list[Vector] = []
    for vec in vectors:
        cur = list(vec)
        for prev in ortho:
            coeff = dot(cur, prev) / dot(prev, prev)
            cur = [c - coeff * p for c, p in zip(cur, prev)]
        ortho.append(max_normalized(cur))
    return ortho


@dataclass(frozen=True)
class Frame:
    """Tangent and normal spanning vectors attached to one sub-simplex."""

    sub_simplex: SubSimplexId
    tangents: tuple[Vector, ...]
    normals: tuple[Vector, ...]
    convention: str
    globality: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.globality:
            count = len(self.tangents) + len(self.normals)
            object.__setattr__(self, "globality", ("local",) * count)

    @property
    def all_vectors(self) -> tuple[Vector, ...]:
        return self.tangents + self.normals


def build_frame(simplex: Simplex, f: SubSimplexId, convention: str = "edge_tangents_face_normals") -> Frame:
    """Frame for f: ℓ edge tangents within f, n−ℓ normals indexed by f*.

    Every ∇λ_i with i outside f is orthogonal to the span of f's edges, so
    the normal group is exactly orthogonal to the tangent group without any
    extra projection.  Vectors are max-entry normalized to stay rational.
    """
    if convention not in FRAME_CONVENTIONS:
        raise ValueError(f"unknown frame convention {convention!r}")
    n = simplex.dim
    if f.parent_dim != n:
        raise ValueError("sub-simplex does not belong to this simplex")
    idx = f.indices
    tangents = [max_normalized(simplex.edge_vector(idx[0], idx[i])) for i in range(1, len(idx))]
    grads = barycentric_gradients(simplex)
    normals = [max_normalized(grads[i]) for i in f.complement_labels()]
    if convention == "orthogonalized":
        if f.dim == 0:
            normals = [tuple(Fraction(int(i == d)) for i in range(n)) for d in range(n)]
        else:
            tangents = _gram_schmidt(tangents)
            normals = _gram_schmidt(normals)
    return Frame(f, tuple(tangents), tuple(normals), convention)

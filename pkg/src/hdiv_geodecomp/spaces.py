"""Shape-function spaces, their sub-simplex decompositions, traces, and div.

Every basis member is one scalar Bernstein polynomial times one constant
coefficient (a vector or a matrix from the tagged constrained space), so
ranks and kernels of whole spaces reduce to exact integer elimination on
flattened coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cache
from typing import Sequence

from . import bernstein as bn
from . import linalg, tensors
from .checks import FAIL, PASS, SKIPPED, CheckResult
from .simplex import Simplex, SubSimplexId, barycentric_gradients, build_frame, enumerate_subsimplices, max_normalized
from .tensors import AffineField, SpaceTag


class Family(Enum):
    LAGRANGE = "lagrange"
    VECTOR_LAGRANGE = "vector"
    FACE = "face"
    TRACELESS = "traceless"
    SYMMETRIC = "symmetric"

    @property
    def space_tag(self) -> SpaceTag | None:
        if self is Family.LAGRANGE:
            return None
        if self in (Family.VECTOR_LAGRANGE, Family.FACE):
            return SpaceTag.VECTOR
        if self is Family.TRACELESS:
            return SpaceTag.TRACELESS
        return SpaceTag.SYMMETRIC

    def value_width(self, n: int) -> int:
        tag = self.space_tag
        return 1 if tag is None else tag.value_width(n)

    def constrained_dim(self, n: int) -> int:
        tag = self.space_tag
        return 1 if tag is None else tag.dim(n)


@dataclass(frozen=True)
class Provenance:
    sub_simplex: SubSimplexId
    component: str  # "tangential" | "normal" | "lattice"


@dataclass(frozen=True)
class ShapeFunction:
    """scalar(x) · coeff, with the coefficient constant over the simplex."""

    scalar: bn.BernsteinPoly
    coeff: tuple
    provenance: Provenance

    def flat(self, degree: int) -> list[Fraction]:
        """Coefficients over lattice × value components, component fastest."""
        scalars = bn.coeff_vector(self.scalar, degree)
        parts = tensors.flatten(self.coeff)
        return [s * c for s in scalars for c in parts]

    def components(self) -> tuple[bn.BernsteinPoly, ...]:
        parts = tensors.flatten(self.coeff)
        return tuple(self.scalar * c for c in parts)


@dataclass(frozen=True)
class SpaceBasis:
    family: Family
    n: int
    degree: int
    members: tuple[ShapeFunction, ...]

    @property
    def flat_dim(self) -> int:
        return self.family.value_width(self.n) * bn.space_dim(self.n, self.degree)

    def flat_matrix(self) -> list[list[Fraction]]:
        return [m.flat(self.degree) for m in self.members]

    def members_at(self, f: SubSimplexId, component: str | None = None) -> list[ShapeFunction]:
        out = []
        for m in self.members:
            if m.provenance.sub_simplex != f:
                continue
            if component is not None and m.provenance.component != component:
                continue
            out.append(m)
        return out


def _scalar_coeff() -> tuple:
    return (Fraction(1),)


@cache
def decompose(family: Family, simplex: Simplex, degree: int, frame_convention: str = "edge_tangents_face_normals") -> SpaceBasis:
    """Sub-simplex decomposition of ℙ_degree(T; family space).

    Members are b_f · (monomial on f) · (tangential or normal direction),
    grouped by sub-simplex.  The union is verified to have full exact rank,
    which simultaneously certifies the direct sum and the total span.
    """
    if degree < 1:
        raise ValueError("decompositions start at degree 1")
    n = simplex.dim
    tag = family.space_tag
    members: list[ShapeFunction] = []
    for ell in range(n + 1):
        for f in enumerate_subsimplices(n, ell):
            lattice_dim = bn.space_dim(ell, degree - ell - 1)
            if lattice_dim == 0:
                continue
            bubble_poly = bn.bubble(f)
            scalars = [
                bn.multiply(bubble_poly, bn.extend(mono, bubble_poly.domain))
                for mono in bn.monomial_basis(f, degree - ell - 1)
            ]
            if tag is None:
                members.extend(
                    ShapeFunction(s, _scalar_coeff(), Provenance(f, "lattice"))
                    for s in scalars
                )
                continue
            frame = build_frame(simplex, f, frame_convention)
            split = tensors.tn_split(f, frame, tag)
            for s in scalars:
                members.extend(
                    ShapeFunction(s, c, Provenance(f, "tangential"))
                    for c in split.tangential_basis
                )
                members.extend(
                    ShapeFunction(s, c, Provenance(f, "normal"))
                    for c in split.normal_basis
                )
    basis = SpaceBasis(family, n, degree, tuple(members))
    expected = family.constrained_dim(n) * bn.space_dim(n, degree)
    if len(members) != expected or linalg.rank(basis.flat_matrix()) != expected:
        raise AssertionError(
            f"decomposition of {family.value} n={n} r={degree} is not a basis"
        )
    return basis


def lattice_basis(family: Family, simplex: Simplex, degree: int) -> SpaceBasis:
    """The plain monomial × constrained-direction basis of the same space."""
    n = simplex.dim
    tag = family.space_tag
    domain = bn.full_domain(n)
    full = SubSimplexId(tuple(range(n + 1)), n)
    if tag is None:
        directions: Sequence = [_scalar_coeff()]
    elif tag is SpaceTag.VECTOR:
        directions = [tuple(Fraction(int(i == d)) for i in range(n)) for d in range(n)]
    else:
        frame = build_frame(simplex, full)
        split = tensors.tn_split(full, frame, tag)
        directions = list(split.tangential_basis + split.normal_basis)
    members = [
        ShapeFunction(mono, c, Provenance(full, "lattice"))
        for mono in bn.monomial_basis(domain, degree)
        for c in directions
    ]
    return SpaceBasis(family, n, degree, tuple(members))


def facet_normal(simplex: Simplex, facet: SubSimplexId):
    """Scaled normal of a facet: the gradient of its missing coordinate."""
    if facet.dim != simplex.dim - 1:
        raise ValueError("normal traces are defined on facets only")
    missing = facet.complement_labels()[0]
    return max_normalized(barycentric_gradients(simplex)[missing])


def trace_div(member: ShapeFunction, facet: SubSimplexId, normal: Sequence):
    """Normal trace on a facet: (coeff ∘ n_F) scaled by the restricted scalar.

    Returns one polynomial on the facet for vector coefficients, and a tuple
    of n polynomials (the components of coeff·n_F) for matrix coefficients.
    """
    if facet.dim != facet.parent_dim - 1:
        raise ValueError("normal traces are defined on facets only")
    restricted = bn.restrict(member.scalar, facet)
    if member.coeff and isinstance(member.coeff[0], tuple):
        contracted = tensors.mat_vec(member.coeff, normal)
        return tuple(restricted * c for c in contracted)
    weight = tensors.dot(member.coeff, normal) if len(member.coeff) > 1 else member.coeff[0]
    return restricted * weight


def bubble_space(family: Family, simplex: Simplex, degree: int, frame_convention: str = "edge_tangents_face_normals") -> SpaceBasis:
    """Tangential members on positive-dimensional sub-simplices: ker(tr^div)."""
    if family is Family.LAGRANGE:
        raise ValueError("bubble spaces are defined for the vector/matrix families")
    if degree < 2:
        return SpaceBasis(family, simplex.dim, max(degree, 0), ())
    basis = decompose(family, simplex, degree, frame_convention)
    members = tuple(
        m
        for m in basis.members
        if m.provenance.component == "tangential" and m.provenance.sub_simplex.dim >= 1
    )
    return SpaceBasis(family, simplex.dim, degree, members)


def divergence(components: Sequence[bn.BernsteinPoly], simplex: Simplex) -> bn.BernsteinPoly:
    """Σ_d ∂_d components[d] for a vector field given component-wise."""
    n = simplex.dim
    if len(components) != n:
        raise ValueError("one component per ambient coordinate expected")
    total = bn.zero(bn.full_domain(n))
    for d, comp in enumerate(components):
        direction = tuple(Fraction(int(i == d)) for i in range(n))
        total = total + bn.derivative(comp, direction, simplex)
    return total


def div_field(member: ShapeFunction, simplex: Simplex):
    """div of one member: scalar poly for vectors, row-wise vector for matrices."""
    if member.coeff and isinstance(member.coeff[0], tuple):
        return tuple(
            bn.derivative(member.scalar, row, simplex) for row in member.coeff
        )
    return bn.derivative(member.scalar, member.coeff, simplex)


def affine_field_polys(field: AffineField, simplex: Simplex) -> tuple[bn.BernsteinPoly, ...]:
    """Degree-1 Bernstein form of an affine field by vertex interpolation."""
    n = simplex.dim
    domain = bn.full_domain(n)
    values = [field(v) for v in simplex.vertices]
    comps = []
    for d in range(n):
        poly = bn.zero(domain, 1)
        for i in range(n + 1):
            poly = poly + values[i][d] * bn.barycentric(domain, i)
        comps.append(poly)
    return tuple(comps)


def _div_flat(member: ShapeFunction, simplex: Simplex, degree: int) -> list[Fraction]:
    image = div_field(member, simplex)
    if isinstance(image, tuple):
        vectors = [bn.coeff_vector(p, degree) for p in image]
        return [v[k] for k in range(len(vectors[0])) for v in vectors]
    return bn.coeff_vector(image, degree)


def div_codim_fields(family: Family, simplex: Simplex) -> list[tuple[bn.BernsteinPoly, ...]]:
    """The fields div(bubbles) are orthogonal to: 1, RT, or RM."""
    n = simplex.dim
    if family in (Family.VECTOR_LAGRANGE, Family.FACE):
        return [(bn.one(bn.full_domain(n)),)]
    rt, rm = tensors.rigid_spaces(n)
    fields = rt if family is Family.TRACELESS else rm
    return [affine_field_polys(f, simplex) for f in fields]


_DIV_IMAGE_MIN_DEGREE = {
    Family.VECTOR_LAGRANGE: 2,
    Family.FACE: 2,
    Family.TRACELESS: 2,
    Family.SYMMETRIC: 3,
}


def verify_bubble_characterization(family: Family, simplex: Simplex, degree: int, frame_convention: str = "edge_tangents_face_normals") -> CheckResult:
    """Check 𝔹 = ker(tr^div) and injectivity of the trace on normal members."""
    name = f"bubble_characterization[{family.value},n={simplex.dim},r={degree}]"
    if family is Family.LAGRANGE:
        raise ValueError("bubble spaces are defined for the vector/matrix families")
    if degree < 2:
        return CheckResult(name, SKIPPED, {"reason": f"degree {degree} below 2"})
    n = simplex.dim
    basis = decompose(family, simplex, degree, frame_convention)
    facets = enumerate_subsimplices(n, n - 1)

    def stacked_trace(member: ShapeFunction) -> list[Fraction]:
        out: list[Fraction] = []
        for facet in facets:
            traced = trace_div(member, facet, facet_normal(simplex, facet))
            polys = traced if isinstance(traced, tuple) else (traced,)
            for p in polys:
                out.extend(bn.coeff_vector(p, degree))
        return out

    # Kernel of the trace map on the constrained space, in the coordinates
    # of its lattice basis (the constrained directions times monomials).
    reference = lattice_basis(family, simplex, degree)
    member_traces = [stacked_trace(m) for m in reference.members]
    trace_rows = [list(col) for col in zip(*member_traces)]
    kernel_coords = linalg.nullspace(trace_rows, cols=len(reference.members))
    ref_flat = reference.flat_matrix()
    kernel = [
        [sum(c * row[k] for c, row in zip(coords, ref_flat)) for k in range(len(ref_flat[0]))]
        for coords in kernel_coords
    ]
    bubbles = bubble_space(family, simplex, degree, frame_convention)
    bubble_flat = bubbles.flat_matrix()
    if not linalg.subspace_equal(kernel, bubble_flat):
        witness = {
            "kernel_dim": len(kernel),
            "bubble_dim": len(bubble_flat),
            "identity": "ker(tr_div) == bubble span",
        }
        return CheckResult(name, FAIL, witness)
    normal_members = [m for m in basis.members if m.provenance.component == "normal"]
    normal_trace_rows = [stacked_trace(m) for m in normal_members]
    injective = linalg.rank(normal_trace_rows) == len(normal_members)
    if not injective:
        return CheckResult(
            name,
            FAIL,
            {
                "identity": "trace injective on normal members",
                "normal_members": len(normal_members),
                "trace_rank": linalg.rank(normal_trace_rows),
            },
        )
    return CheckResult(
        name,
        PASS,
        {"bubble_dim": len(bubble_flat), "normal_members": len(normal_members)},
    )


def verify_div_image(family: Family, simplex: Simplex, degree: int, frame_convention: str = "edge_tangents_face_normals") -> CheckResult:
    """Check rank(div 𝔹) = dim ℙ_{r−1}(target) − codim for the family."""
    name = f"div_image[{family.value},n={simplex.dim},r={degree}]"
    if family is Family.LAGRANGE:
        raise ValueError("div images are defined for the vector/matrix families")
    threshold = _DIV_IMAGE_MIN_DEGREE[family]
    if degree < threshold:
        return CheckResult(
            name, SKIPPED, {"reason": f"degree {degree} below {threshold}"}
        )
    n = simplex.dim
    bubbles = bubble_space(family, simplex, degree, frame_convention)
    rows = [_div_flat(m, simplex, degree - 1) for m in bubbles.members]
    got = linalg.rank(rows)
    target_width = 1 if family in (Family.VECTOR_LAGRANGE, Family.FACE) else n
    codim = len(div_codim_fields(family, simplex))
    expected = target_width * bn.space_dim(n, degree - 1) - codim
    status = PASS if got == expected else FAIL
    return CheckResult(
        name,
        status,
        {"rank": got, "expected": expected, "codim": codim, "bubble_dim": len(bubbles.members)},
    )

"""Moment functionals, unisolvence certificates, quotients, and facet merges."""

from __future__ import annotations

import random
from fractions import Fraction
from math import comb

import pytest

from hdiv_geodecomp import bernstein as bn
from hdiv_geodecomp import dofs as dofmod
from hdiv_geodecomp import linalg, tensors
from hdiv_geodecomp.checks import PASS
from hdiv_geodecomp.dofs import (
    FACEWISE,
    GLOBAL,
    INTERIOR,
    MOD_P0,
    MOD_P1,
    MOMENT,
    POINT_VALUE,
    MixedDirection,
    apply_functional,
    build_dofs,
    certify_unisolvence,
    dof_matrix,
    merge_all_faces,
    merge_face_dofs,
    quotient_face_space,
    tangential_polynomial_fields,
)
from hdiv_geodecomp.simplex import SubSimplexId, enumerate_subsimplices, reference_simplex
from hdiv_geodecomp.spaces import Family, decompose

from conftest import random_simplex


# ---------------------------------------------------------------- sizes


def test_lagrange_interval_nodal_matrix_is_identity():
    dofs = build_dofs(Family.LAGRANGE, 1, 1, None)
    basis = decompose(Family.LAGRANGE, reference_simplex(1), 1)
    assert dof_matrix(dofs, basis) == [
        [Fraction(1), Fraction(0)],
        [Fraction(0), Fraction(1)],
    ]


def test_certificate_sizes_match_space_dimensions():
    cases = [
        (Family.FACE, 2, 2, -1, 12),
        (Family.FACE, 3, 3, 1, 60),
        (Family.FACE, 3, 2, -1, 30),
        (Family.SYMMETRIC, 2, 2, 0, 18),
        (Family.SYMMETRIC, 2, 3, 0, 30),
        (Family.TRACELESS, 3, 2, 0, 80),
    ]
    for family, n, r, k, size in cases:
        cert = certify_unisolvence(family, n, r, k)
        assert cert.size == size == family.constrained_dim(n) * comb(n + r, n)
        assert cert.invertible, (family, n, r, k, cert.failure)


def test_traceless_tet_quadratic_vertex_layout():
    dofs = build_dofs(Family.TRACELESS, 3, 2, 0)
    for v in enumerate_subsimplices(3, 0):
        at_v = dofs.at_site(v)
        assert len(at_v) == 8
        assert all(nf.kind == POINT_VALUE and nf.scope == GLOBAL for nf in at_v)


def test_stenberg_vector_vertices_carry_three_point_values():
    dofs = build_dofs(Family.FACE, 3, 2, 0)
    for v in enumerate_subsimplices(3, 0):
        at_v = dofs.at_site(v)
        assert len(at_v) == 3
        assert all(nf.kind == POINT_VALUE for nf in at_v)


def _scope_counts(dofs):
    out = {GLOBAL: 0, FACEWISE: 0, INTERIOR: 0}
    for nf in dofs.functionals:
        out[nf.scope] += 1
    return out


@pytest.mark.parametrize("n,r,k", [(2, 3, -1), (2, 3, 0), (3, 2, 0), (3, 4, 1)])
def test_vector_scope_counts_match_closed_forms(n, r, k):
    dofs = build_dofs(Family.FACE, n, r, k)
    counts = _scope_counts(dofs)
    global_expected = sum(
        comb(n + 1, ell + 1) * (n - ell) * comb(r - 1, ell) for ell in range(k + 1)
    )
    facewise_expected = sum(
        comb(n + 1, ell + 1) * (n - ell) * comb(r - 1, ell) for ell in range(k + 1, n)
    )
    bubble_expected = sum(
        comb(n + 1, ell + 1) * ell * comb(r - 1, ell) for ell in range(1, n + 1)
    )
    assert counts[GLOBAL] == global_expected
    assert counts[FACEWISE] == facewise_expected
    assert counts[INTERIOR] == bubble_expected
    assert dofs.count == n * comb(n + r, n)


@pytest.mark.parametrize("n,r,k", [(2, 3, 0), (3, 3, 0), (3, 3, 1)])
def test_symmetric_scope_counts_match_closed_forms(n, r, k):
    dofs = build_dofs(Family.SYMMETRIC, n, r, k)
    counts = _scope_counts(dofs)
    normal_dim = lambda ell: ell * (n - ell) + (n - ell) * (n - ell + 1) // 2
    global_expected = sum(
        comb(n + 1, ell + 1) * normal_dim(ell) * comb(r - 1, ell)
        for ell in range(k + 1)
    ) + sum(
        comb(n + 1, ell + 1) * (n - ell) * (n - ell + 1) // 2 * comb(r - 1, ell)
        for ell in range(k + 1, n)
    )
    facewise_expected = sum(
        comb(n + 1, ell + 1) * ell * (n - ell) * comb(r - 1, ell)
        for ell in range(k + 1, n)
    )
    assert counts[GLOBAL] == global_expected
    assert counts[FACEWISE] == facewise_expected
    assert dofs.count == (n * (n + 1) // 2) * comb(n + r, n)


# ------------------------------------------------------- unisolvence sweep


def _admissible():
    for n in (1, 2, 3):
        for r in (1, 2, 3, 4):
            yield Family.LAGRANGE, n, r, None
            for k in range(-1, n - 1):
                yield Family.FACE, n, r, k
            if n >= 2 and r >= 2:
                for k in range(0, n - 1):
                    yield Family.TRACELESS, n, r, k
                    yield Family.SYMMETRIC, n, r, k


def test_unisolvence_sweep_all_admissible_parameters():
    for family, n, r, k in _admissible():
        cert = certify_unisolvence(family, n, r, k)
        assert cert.invertible, (family.value, n, r, k, cert.failure)
        assert cert.size == family.constrained_dim(n) * comb(n + r, n)
        assert cert.method == "site_blocks"


def test_certificates_on_random_simplices():
    rng = random.Random(29)
    for family, n, r, k in [
        (Family.FACE, 2, 2, 0),
        (Family.TRACELESS, 2, 3, 0),
        (Family.SYMMETRIC, 3, 2, 1),
        (Family.FACE, 3, 2, -1),
    ]:
        cert = certify_unisolvence(family, random_simplex(rng, n), r, k)
        assert cert.invertible, (family.value, n, r, k, cert.failure)


@pytest.mark.parametrize("convention", ["orthogonalized", "face_normal_basis"])
def test_certificates_under_other_frame_conventions(convention):
    for family, n, r, k in [(Family.FACE, 2, 2, 0), (Family.SYMMETRIC, 2, 2, 0)]:
        cert = certify_unisolvence(family, n, r, k, frame_convention=convention)
        assert cert.invertible
        assert cert.frame_convention == convention


def test_dense_and_blocked_paths_agree():
    for family, n, r, k in [(Family.FACE, 2, 2, 0), (Family.SYMMETRIC, 2, 2, 0)]:
        blocked = certify_unisolvence(family, n, r, k)
        dense = certify_unisolvence(family, n, r, k, method="dense")
        assert blocked.invertible == dense.invertible == True
        assert blocked.size == dense.size


def test_vector_face_matrix_has_nonzero_determinant():
    dofs = build_dofs(Family.FACE, 2, 2, -1)
    basis = decompose(Family.FACE, reference_simplex(2), 2)
    assert linalg.det(dof_matrix(dofs, basis)) != 0


def test_pivot_hash_is_reproducible():
    a = certify_unisolvence(Family.FACE, 2, 3, 0)
    b = certify_unisolvence(Family.FACE, 2, 3, 0)
    assert a.pivot_hash == b.pivot_hash
    assert a.pivot_hash != certify_unisolvence(Family.FACE, 2, 2, 0).pivot_hash


# ------------------------------------------------------------ sparsity


def test_boundary_functionals_annihilate_tangential_members():
    simp = reference_simplex(2)
    dofs = build_dofs(Family.FACE, simp, 3, 0)
    basis = decompose(Family.FACE, simp, 3)
    matrix = dof_matrix(dofs, basis)
    for i, nf in enumerate(dofs.functionals):
        if nf.scope == INTERIOR:
            continue
        for j, member in enumerate(basis.members):
            if member.provenance.component == "tangential":
                assert matrix[i][j] == 0


def test_lower_site_functionals_annihilate_disjoint_equal_dim_members():
    simp = reference_simplex(3)
    dofs = build_dofs(Family.SYMMETRIC, simp, 2, 0)
    basis = decompose(Family.SYMMETRIC, simp, 2)
    matrix = dof_matrix(dofs, basis)
    for i, nf in enumerate(dofs.functionals):
        if nf.scope == INTERIOR:
            continue
        for j, member in enumerate(basis.members):
            f = member.provenance.sub_simplex
            if f.dim >= nf.site.dim and f != nf.site and f.dim < 3:
                assert matrix[i][j] == 0, (nf.site.indices, f.indices)


def test_vertex_point_values_equal_evaluations():
    simp = reference_simplex(2)
    dofs = build_dofs(Family.SYMMETRIC, simp, 2, 0)
    basis = decompose(Family.SYMMETRIC, simp, 2)
    v = SubSimplexId((1,), 2)
    coords = (Fraction(0), Fraction(1), Fraction(0))
    for nf in dofs.at_site(v):
        direction = nf.terms[0].direction
        for member in basis.members:
            expected = member.scalar.evaluate(coords) * tensors.frobenius(
                member.coeff, direction
            )
            assert apply_functional(nf, member) == expected


def test_symmetric_facewise_directions_are_tangent_normal_pairs():
    dofs = build_dofs(Family.SYMMETRIC, 3, 2, 0)
    facewise = [nf for nf in dofs.functionals if nf.scope == FACEWISE]
    assert facewise
    for nf in facewise:
        for term in nf.terms:
            assert isinstance(term.direction, MixedDirection)


# ----------------------------------------------------------- validation


def test_parameter_validation():
    with pytest.raises(ValueError):
        build_dofs(Family.FACE, 2, 2, -2)
    with pytest.raises(ValueError):
        build_dofs(Family.FACE, 2, 2, 1)
    with pytest.raises(ValueError):
        build_dofs(Family.TRACELESS, 2, 2, -1)
    with pytest.raises(ValueError):
        build_dofs(Family.TRACELESS, 2, 1, 0)
    with pytest.raises(ValueError):
        build_dofs(Family.SYMMETRIC, 3, 1, 0)
    with pytest.raises(ValueError):
        build_dofs(Family.FACE, 2, 0, -1)
    with pytest.raises(ValueError):
        build_dofs(Family.LAGRANGE, 2, 2, 0)


def test_dof_matrix_rejects_mismatched_basis():
    dofs = build_dofs(Family.FACE, 2, 2, -1)
    with pytest.raises(ValueError):
        dof_matrix(dofs, decompose(Family.FACE, reference_simplex(2), 3))
    with pytest.raises(ValueError):
        dof_matrix(dofs, decompose(Family.SYMMETRIC, reference_simplex(2), 2))


# ------------------------------------------------------------- quotient


def test_quotient_face_space_example_dims():
    F = SubSimplexId((0, 1, 2), 3)
    q = quotient_face_space(F, 2, 0, MOD_P0)
    assert len(q.complement) == 2
    assert len(q.fixed_part) == 1
    assert len(q.full_basis) == 3


def test_quotient_with_no_continuity_spans_full_face_space():
    # with continuity order -1 the bubble collection is all of P_r(F)
    F = SubSimplexId((0, 1, 2), 3)
    r = 3
    q = quotient_face_space(F, r, -1, MOD_P0)
    assert len(q.full_basis) == comb(r + 2, 2)
    vectors = [bn.coeff_vector(p, r) for p in q.full_basis]
    assert linalg.rank(vectors) == comb(r + 2, 2)


def test_quotient_complement_is_exactly_orthogonal():
    F = SubSimplexId((0, 1, 2), 3)
    for mode, fixed_dim in [(MOD_P0, 1), (MOD_P1, 3)]:
        q = quotient_face_space(F, 4, 0, mode)
        assert len(q.fixed_part) == fixed_dim
        for p in q.complement:
            for fixed in q.fixed_part:
                assert bn.integrate(bn.multiply(p, fixed), F).value == 0


def test_quotient_degree_preconditions():
    F = SubSimplexId((0, 1, 2), 3)
    with pytest.raises(ValueError):
        quotient_face_space(F, 1, 0, MOD_P0)
    with pytest.raises(ValueError):
        quotient_face_space(F, 3, 1, MOD_P1)  # k = dim F - 1 needs r >= k+3
    quotient_face_space(F, 4, 1, MOD_P1)
    with pytest.raises(ValueError):
        quotient_face_space(F, 2, 0, "mod_P2")


# --------------------------------------------------------------- merges


def test_vector_merge_collapses_to_plain_facet_moments():
    dofs = build_dofs(Family.FACE, 3, 2, -1)
    F = SubSimplexId((0, 1, 2), 3)
    merged = merge_face_dofs(dofs, F)
    assert len(merged.added) == comb(2 + 2, 2) == 6
    assert len(merged.removed) == 6
    assert merged.span_check.status == PASS
    assert all(nf.site == F and nf.scope == FACEWISE for nf in merged.added)
    assert merged.dofs.count == dofs.count


def test_merge_then_certify_keeps_size_and_invertibility():
    for family, n, r, k in [
        (Family.FACE, 2, 2, -1),
        (Family.FACE, 2, 2, 0),
        (Family.TRACELESS, 2, 3, 0),
        (Family.SYMMETRIC, 2, 2, 0),
    ]:
        dofs = build_dofs(family, n, r, k)
        merged = merge_all_faces(dofs)
        assert merged.count == dofs.count
        cert = certify_unisolvence(dofs=merged)
        assert cert.method == "dense"
        assert cert.invertible, (family.value, cert.failure)
        assert cert.size == dofs.count


def test_symmetric_merge_uses_facet_tangent_fields():
    dofs = build_dofs(Family.SYMMETRIC, 3, 3, 0)
    F = SubSimplexId((0, 1, 3), 3)
    merged = merge_face_dofs(dofs, F)
    assert len(merged.added) == 8  # replaces 3 edges x 2 + face x 2 moments
    assert merged.span_check.status == PASS
    for nf in merged.added:
        assert all(isinstance(t.direction, MixedDirection) for t in nf.terms)


@pytest.mark.parametrize(
    "n,r,expected",
    [(3, 2, 3), (3, 3, 8), (2, 3, 2)],
)
def test_tangential_field_counts(n, r, expected):
    simp = reference_simplex(n)
    F = enumerate_subsimplices(n, n - 1)[0]
    fields = tangential_polynomial_fields(simp, F, r - 2)
    assert len(fields) == expected


def test_tangential_fields_have_low_degree_chart_pairing():
    # q . x, written in the edge chart of the facet, must drop one degree
    simp = reference_simplex(3)
    F = SubSimplexId((0, 1, 2), 3)
    r = 3
    fields = tangential_polynomial_fields(simp, F, r - 2)
    lower = [bn.coeff_vector(m, r) for m in bn.monomial_basis(F, r - 1)]
    for weights in fields:
        paired = bn.zero(F)
        for pos, w in enumerate(weights):
            chart = bn.barycentric(F, F.indices[pos + 1])
            paired = paired + bn.multiply(w, chart)
        stack = lower + [bn.coeff_vector(paired, r)]
        assert linalg.rank(stack) == linalg.rank(lower)


def test_merge_validation():
    dofs = build_dofs(Family.FACE, 2, 2, 0)
    edge = SubSimplexId((0, 1), 2)
    with pytest.raises(ValueError):
        merge_face_dofs(dofs, SubSimplexId((0,), 2))
    merged = merge_face_dofs(dofs, edge).dofs
    with pytest.raises(ValueError):
        merge_face_dofs(merged, edge)
    with pytest.raises(ValueError):
        merge_face_dofs(build_dofs(Family.SYMMETRIC, 3, 2, 1), SubSimplexId((0, 1, 2), 3))
    with pytest.raises(ValueError):
        merge_face_dofs(build_dofs(Family.LAGRANGE, 2, 2, None), edge)


def test_merged_sets_stay_grouped_by_site():
    dofs = merge_all_faces(build_dofs(Family.FACE, 3, 2, -1))
    dims = [nf.site.dim for nf in dofs.functionals]
    assert dims == sorted(dims)

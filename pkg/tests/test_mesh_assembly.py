"""Builtin meshes, refinement, global assembly, conformity, div image, inf-sup."""

from __future__ import annotations

from fractions import Fraction

import pytest

from hdiv_geodecomp import assembly, linalg
from hdiv_geodecomp.assembly import (
    AssemblyError,
    assemble,
    check_conformity,
    check_dims,
    check_div_onto,
    face_dim_formula,
    flip_facet_orientation,
    infsup_constant,
    infsup_sweep,
    lagrange_dim_formula,
)
from hdiv_geodecomp.checks import FAIL, PASS, SKIPPED
from hdiv_geodecomp.dofs import INTERIOR, dof_matrix
from hdiv_geodecomp.mesh import (
    Mesh,
    MeshError,
    builtin_mesh,
    load_mesh,
    mesh_from_data,
    refine,
    resolve_mesh,
    save_mesh,
    validate_mesh,
)
from hdiv_geodecomp.spaces import Family


# ---------------------------------------------------------------- meshes


def _hanging_node_mesh() -> Mesh:
    # fine pair glued to one coarse triangle along its left edge
    return Mesh(
        2,
        ((0, 0), (2, 0), (0, 2), (0, 1), (-1, 0), (-1, 2)),
        ((0, 1, 2), (0, 3, 4), (2, 3, 5)),
    )


def test_builtin_mesh_inventories():
    # name -> (dim, vertices, cells, interior facets, boundary facets)
    expected = {
        "unit_interval_4": (1, 5, 4, 3, 2),
        "two_triangles": (2, 4, 2, 1, 4),
        "criss_cross": (2, 5, 4, 4, 4),
        "two_tets": (3, 5, 2, 1, 6),
        "cube_freudenthal": (3, 8, 6, 6, 12),
        "fichera_coarse": (3, 26, 42, 60, 48),
    }
    for name, (dim, nv, nc, ni, nb) in expected.items():
        m = builtin_mesh(name)
        got = (
            m.dim,
            len(m.vertices),
            len(m.cells),
            len(m.interior_facets),
            len(m.boundary_facets),
        )
        assert got == (dim, nv, nc, ni, nb), name


def test_refinement_counts_and_volume_conservation():
    for name, children in [("two_triangles", 4), ("two_tets", 8), ("unit_interval_2", 2)]:
        m = builtin_mesh(name)
        fine = refine(m)
        assert len(fine.cells) == children * len(m.cells)
        coarse_vol = sum(s.volume() for s in m.cell_simplices)
        fine_vol = sum(s.volume() for s in fine.cell_simplices)
        assert coarse_vol == fine_vol
    assert len(builtin_mesh("refine(refine(two_triangles))").cells) == 32


def test_refined_two_triangles_facet_split():
    fine = refine(builtin_mesh("two_triangles"))
    assert len(fine.vertices) == 9
    assert len(fine.interior_facets) == 8
    assert len(fine.boundary_facets) == 8


def test_builtin_name_parsing_errors():
    with pytest.raises(MeshError):
        builtin_mesh("no_such_mesh")
    with pytest.raises(MeshError):
        builtin_mesh("unit_interval_0")
    with pytest.raises(MeshError):
        builtin_mesh("refine(")


def test_mesh_json_roundtrip(tmp_path):
    m = mesh_from_data(
        2,
        [(0, 0), (1, 0), (Fraction(1, 3), Fraction(2, 7)), (1, 1)],
        [(0, 1, 2), (1, 2, 3)],
    )
    path = tmp_path / "mesh.json"
    save_mesh(m, path)
    back = load_mesh(path)
    assert back.dim == m.dim
    assert back.vertices == m.vertices
    assert back.cells == m.cells
    assert back.vertices[2][0] == Fraction(1, 3)
    assert resolve_mesh(str(path)).cells == m.cells
    assert resolve_mesh("two_triangles").cells == builtin_mesh("two_triangles").cells


def test_validate_mesh_rejects_bad_input():
    with pytest.raises(MeshError):
        # coincident vertices
        mesh_from_data(1, [(0,), (0,), (1,)], [(0, 2), (1, 2)])
    with pytest.raises(MeshError):
        # flat triangle
        mesh_from_data(2, [(0, 0), (1, 0), (2, 0)], [(0, 1, 2)])
    with pytest.raises(MeshError):
        # vertex 1 sits on three segments
        mesh_from_data(1, [(0,), (1,), (2,), (3,)], [(0, 1), (1, 2), (1, 3)])
    with pytest.raises(MeshError):
        validate_mesh(_hanging_node_mesh())


def test_shared_facet_normal_and_frames_are_cell_independent():
    m = builtin_mesh("two_triangles")
    facet = m.interior_facets[0]
    assert facet == (1, 2)
    assert m.facet_normal(facet) == (Fraction(1), Fraction(1))
    c1, c2 = m.facet_cells[facet]
    f1 = m.global_frame(c1, m.local_site(c1, facet))
    f2 = m.global_frame(c2, m.local_site(c2, facet))
    assert f1.tangents == f2.tangents
    assert f1.normals == f2.normals
    assert set(f1.globality) == {"global"}


def test_local_and_global_site_roundtrip():
    m = builtin_mesh("criss_cross")
    for ci in range(len(m.cells)):
        for ell in range(m.dim):
            for gsite in m.sub_simplices(ell):
                if ci not in m.cells_containing(gsite):
                    continue
                loc = m.local_site(ci, gsite)
                assert m.global_site(ci, loc) == gsite


# ---------------------------------------------------------------- dimensions


def test_assembled_dims_match_displayed_examples():
    m = builtin_mesh("two_triangles")
    assert assemble(m, "face", 2, -1).dim == 21
    assert assemble(m, "face", 3, 0).dim == 34
    assert face_dim_formula(m, 2, -1) == 21
    assert face_dim_formula(m, 3, 0) == 34


def test_lagrange_dimension_formula_across_meshes():
    for name in ["unit_interval_3", "two_triangles", "criss_cross", "two_tets", "cube_freudenthal"]:
        m = builtin_mesh(name)
        for r in (1, 2, 3):
            space = assemble(m, Family.LAGRANGE, r)
            assert space.dim == lagrange_dim_formula(m, r)
            assert check_dims(space).status == PASS


def test_vector_dimension_formula_continuity_sweep():
    m = builtin_mesh("two_tets")
    for k in (-1, 0, 1):
        space = assemble(m, "face", 3, k)
        assert space.dim == face_dim_formula(m, 3, k)
        assert check_dims(space).status == PASS
    # raising the continuity order glues more, so dimensions must not grow
    dims = [assemble(m, "face", 3, k).dim for k in (-1, 0, 1)]
    assert dims == sorted(dims, reverse=True)


def test_matrix_dims_reported_without_formula():
    m = builtin_mesh("two_triangles")
    res = check_dims(assemble(m, "traceless", 2, 0))
    assert res.status == PASS
    assert res.witness["formula"] is None
    assert res.witness["assembled"] == 28


# ---------------------------------------------------------------- identification


def test_interior_dofs_stay_cell_private():
    space = assemble(builtin_mesh("criss_cross"), "face", 2, -1)
    owners: dict[int, int] = {}
    for table in space.local_to_global:
        for g in table:
            owners[g] = owners.get(g, 0) + 1
    for g, key in enumerate(space.keys):
        if key[0] == INTERIOR:
            assert owners[g] == 1
        else:
            facet = key[2]
            assert owners[g] == len(space.mesh.cells_containing(facet))


def test_shared_dof_multiplicity_matches_incidence():
    space = assemble(builtin_mesh("two_tets"), "traceless", 2, 0)
    counts: dict[int, int] = {}
    for table in space.local_to_global:
        for g in table:
            counts[g] = counts.get(g, 0) + 1
    for g, key in enumerate(space.keys):
        if key[0] == INTERIOR:
            continue
        owner = key[2] if key[2] is not None else key[1]
        assert counts[g] == len(space.mesh.cells_containing(owner))


def test_dual_coefficients_invert_the_dof_matrix():
    space = assemble(builtin_mesh("two_triangles"), "face", 1, -1)
    for ci in range(2):
        mat = dof_matrix(space.cell_dofs[ci], space.cell_basis(ci))
        dual = space.dual_coefficients(ci)
        n = len(mat)
        prod = [
            [sum(mat[i][j] * dual[j][k] for j in range(n)) for k in range(n)]
            for i in range(n)
        ]
        assert prod == [
            [Fraction(int(i == k)) for k in range(n)] for i in range(n)
        ]


def test_assemble_validates_the_mesh():
    with pytest.raises(MeshError):
        assemble(_hanging_node_mesh(), "face", 1, -1)


# ---------------------------------------------------------------- conformity


BASE_CASES = [
    ("two_triangles", "lagrange", 2, None),
    ("two_triangles", "face", 2, -1),
    ("two_triangles", "face", 3, 0),
    ("two_triangles", "traceless", 2, 0),
    ("two_triangles", "symmetric", 3, 0),
    ("criss_cross", "face", 2, -1),
    ("criss_cross", "symmetric", 3, 0),
    ("two_tets", "lagrange", 2, None),
    ("two_tets", "face", 2, 0),
    ("two_tets", "traceless", 2, 0),
    ("two_tets", "symmetric", 2, 1),
    ("cube_freudenthal", "face", 2, -1),
]


@pytest.mark.parametrize("name,family,degree,k", BASE_CASES)
def test_conformity_exact_on_base_meshes(name, family, degree, k):
    space = assemble(builtin_mesh(name), family, degree, k)
    res = check_conformity(space, samples=1)
    assert res.status == PASS, res.witness["violations"][:3]
    assert res.witness["violations"] == []
    assert res.witness["interior_facets"] == len(space.mesh.interior_facets)
    if family in ("traceless", "symmetric") or (family == "face" and k >= 0):
        assert res.witness["extra_sites"] > 0


def test_conformity_exact_on_refined_two_triangles():
    fine = refine(builtin_mesh("two_triangles"))
    for family, degree, k in [("face", 2, -1), ("traceless", 2, 0), ("symmetric", 3, 0)]:
        res = check_conformity(assemble(fine, family, degree, k), samples=1)
        assert res.status == PASS


def test_flipped_facet_is_detected():
    m = builtin_mesh("two_triangles")
    for family, degree, k in [("face", 2, -1), ("traceless", 2, 0), ("symmetric", 3, 0)]:
        space = assemble(m, family, degree, k)
        broken = flip_facet_orientation(space)
        res = check_conformity(broken, samples=1)
        assert res.status == FAIL
        assert res.witness["violations"]
        flagged = {tuple(v["site"]) for v in res.witness["violations"]}
        assert tuple(m.interior_facets[0]) in flagged


def test_flip_rejects_scalar_family_and_boundary_only_meshes():
    space = assemble(builtin_mesh("two_triangles"), "lagrange", 2)
    with pytest.raises(ValueError):
        flip_facet_orientation(space)


# ---------------------------------------------------------------- div image


def test_div_onto_at_threshold_degrees():
    m = builtin_mesh("two_triangles")
    for family, degree, k in [("face", 2, -1), ("face", 2, 0), ("traceless", 2, 0), ("symmetric", 3, 0)]:
        res = check_div_onto(assemble(m, family, degree, k))
        assert res.status == PASS
        assert res.witness["deficit"] == 0


def test_div_onto_below_threshold_is_recorded_not_asserted():
    res = check_div_onto(assemble(builtin_mesh("two_triangles"), "symmetric", 2, 0))
    assert res.status == SKIPPED
    assert res.witness["degree_threshold"] == 3
    assert res.witness["rank"] <= res.witness["dim_q"]


def test_div_checks_reject_scalar_family():
    space = assemble(builtin_mesh("two_triangles"), "lagrange", 1)
    with pytest.raises(ValueError):
        check_div_onto(space)
    with pytest.raises(ValueError):
        infsup_constant(space)


# ---------------------------------------------------------------- inf-sup


def test_infsup_constant_positive_without_kernel():
    space = assemble(builtin_mesh("two_triangles"), "face", 2, -1)
    res = infsup_constant(space)
    assert res.status == PASS
    assert 0.5 < res.witness["beta"] <= 1.0
    assert res.witness["discarded_modes"] == 0


def test_infsup_sweep_two_levels():
    base = builtin_mesh("two_triangles")
    res = infsup_sweep([base, refine(base)], "face", 2, -1)
    assert res.status == PASS
    assert len(res.witness["betas"]) == 2
    assert all(b > 0 for b in res.witness["betas"])
    assert res.witness["drift"] < 0.2


def test_infsup_sweep_below_threshold_is_skipped():
    base = builtin_mesh("two_triangles")
    res = infsup_sweep([base, refine(base)], "symmetric", 2, 0)
    assert res.status == SKIPPED
    assert all(b > 0 for b in res.witness["betas"])

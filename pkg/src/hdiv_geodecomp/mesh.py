"""Exact rational simplicial meshes: builtins, red refinement, JSON round trip.

Cells are stored as sorted global vertex tuples.  The label order of every
sub-simplex then agrees with the global sorted order in each incident cell,
so restrictions of Bernstein polynomials can be compared across cells index
by index, and edge tangents computed inside a cell coincide with the ones
computed from the global vertex table.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from . import linalg
from .simplex import (
    Frame,
    Simplex,
    SingularGeometryError,
    SubSimplexId,
    barycentric_gradients,
    max_normalized,
)

Coordinate = tuple[Fraction, ...]

BUILTIN_MESH_NAMES = (
    "unit_interval_<m>",
    "two_triangles",
    "criss_cross",
    "two_tets",
    "cube_freudenthal",
    "fichera_coarse",
    "refine(<name>)",
)


class MeshError(ValueError):
    """Raised for inputs that are not conforming simplicial partitions."""


@dataclass(frozen=True)
class Mesh:
    """A conforming partition with exact rational vertex coordinates."""

    dim: int
    vertices: tuple[Coordinate, ...]
    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        pts = tuple(tuple(Fraction(x) for x in p) for p in self.vertices)
        object.__setattr__(self, "vertices", pts)
        cells = tuple(tuple(sorted(int(i) for i in c)) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        n = self.dim
        if n < 1:
            raise MeshError("meshes start at dimension 1")
        if any(len(p) != n for p in pts):
            raise MeshError("vertex width differs from the mesh dimension")
        if not cells:
            raise MeshError("a mesh needs at least one cell")
        for c in cells:
            if len(c) != n + 1 or len(set(c)) != n + 1:
                raise MeshError(f"cell {c} needs {n + 1} distinct vertices")
            if c[0] < 0 or c[-1] >= len(pts):
                raise MeshError(f"cell {c} references a missing vertex")
        if len(set(cells)) != len(cells):
            raise MeshError("duplicate cell")

    @cached_property
    def cell_simplices(self) -> tuple[Simplex, ...]:
        out = []
        for c in self.cells:
            try:
                out.append(Simplex(tuple(self.vertices[i] for i in c)))
            except SingularGeometryError as exc:
                raise MeshError(f"cell {c} is degenerate") from exc
        return tuple(out)

    @cached_property
    def _site_tables(self) -> tuple[dict[int, tuple], dict[tuple, tuple[int, ...]]]:
        by_dim: dict[int, set] = {ell: set() for ell in range(self.dim + 1)}
        incident: dict[tuple, list[int]] = {}
        for ci, c in enumerate(self.cells):
            for ell in range(self.dim + 1):
                for comb_ in itertools.combinations(c, ell + 1):
                    by_dim[ell].add(comb_)
                    incident.setdefault(comb_, []).append(ci)
        sites = {ell: tuple(sorted(vals)) for ell, vals in by_dim.items()}
        return sites, {g: tuple(cs) for g, cs in incident.items()}

    def sub_simplices(self, ell: int) -> tuple[tuple[int, ...], ...]:
        """All ℓ-dimensional sites of the partition, lexicographically."""
        if not 0 <= ell <= self.dim:
            raise ValueError(f"sub-simplex dimension {ell} outside 0..{self.dim}")
        return self._site_tables[0][ell]

    def cells_containing(self, site: tuple[int, ...]) -> tuple[int, ...]:
        return self._site_tables[1].get(tuple(site), ())

    @cached_property
    def facet_cells(self) -> dict[tuple[int, ...], tuple[int, ...]]:
        return {g: self.cells_containing(g) for g in self.sub_simplices(self.dim - 1)}

    @cached_property
    def interior_facets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(g for g, cs in sorted(self.facet_cells.items()) if len(cs) == 2)

    @cached_property
    def boundary_facets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(g for g, cs in sorted(self.facet_cells.items()) if len(cs) == 1)

    def local_site(self, cell_index: int, site: tuple[int, ...]) -> SubSimplexId:
        """The cell-local labels of a global site, order preserved."""
        cell = self.cells[cell_index]
        try:
            positions = tuple(cell.index(g) for g in site)
        except ValueError:
            raise MeshError(f"site {site} is not part of cell {cell}") from None
        return SubSimplexId(positions, self.dim)

    def global_site(self, cell_index: int, f: SubSimplexId) -> tuple[int, ...]:
        cell = self.cells[cell_index]
        return tuple(cell[i] for i in f.indices)

    @cached_property
    def _frame_cache(self) -> dict:
        return {}

    def frame_vectors(self, site: tuple[int, ...]) -> tuple[tuple, tuple]:
        """Mesh-shared tangents and normals of one site.

        Tangents are the max-normalized edge vectors from the first vertex in
        global order; they coincide with the element-local ones because cell
        labels are sorted.  Normals are a primitive integer basis of the
        orthogonal complement of the tangent span, the same from every
        incident cell by construction.
        """
        site = tuple(site)
        hit = self._frame_cache.get(site)
        if hit is not None:
            return hit
        base = self.vertices[site[0]]
        tangents = tuple(
            max_normalized(tuple(b - a for a, b in zip(base, self.vertices[g])))
            for g in site[1:]
        )
        normals = tuple(
            tuple(row) for row in linalg.nullspace(tangents, cols=self.dim)
        )
        self._frame_cache[site] = (tangents, normals)
        return tangents, normals

    def global_frame(self, cell_index: int, f: SubSimplexId) -> Frame:
        """The shared frame of f's global site, attached to cell-local labels."""
        tangents, normals = self.frame_vectors(self.global_site(cell_index, f))
        tags = ("global",) * (len(tangents) + len(normals))
        return Frame(f, tangents, normals, "edge_tangents_face_normals", tags)

    def facet_normal(self, facet: tuple[int, ...]) -> tuple[Fraction, ...]:
        """The chosen normal of a facet: outward from the lowest incident cell."""
        facet = tuple(facet)
        cells = self.facet_cells.get(facet)
        if not cells:
            raise MeshError(f"{facet} is not a facet of this mesh")
        owner = min(cells)
        local = self.local_site(owner, facet)
        missing = local.complement_labels()[0]
        grad = barycentric_gradients(self.cell_simplices[owner])[missing]
        # ∇λ of the opposite vertex points into the cell; the shared normal
        # is the outward one.
        return max_normalized(tuple(-x for x in grad))


def mesh_from_data(dim: int, vertices, cells) -> Mesh:
    mesh = Mesh(dim, tuple(tuple(p) for p in vertices), tuple(tuple(c) for c in cells))
    validate_mesh(mesh)
    return mesh


def _barycentric_of_point(simplex: Simplex, point: Coordinate) -> list[Fraction]:
    system = [list(v) + [Fraction(1)] for v in simplex.vertices]
    rows = [list(col) for col in zip(*system)]
    return linalg.solve(rows, list(point) + [Fraction(1)])


def validate_mesh(mesh: Mesh) -> None:
    """Reject duplicate vertices, degenerate cells, bad incidence, hanging nodes.

    Facets must belong to one or two cells, and no vertex may land inside the
    closed hull of a cell it is not a vertex of; together these catch the
    usual ways a vertex-indexed partition fails to be conforming.
    """
    if len(set(mesh.vertices)) != len(mesh.vertices):
        raise MeshError("two vertices share the same coordinates")
    _ = mesh.cell_simplices
    for facet, cells in mesh.facet_cells.items():
        if len(cells) > 2:
            raise MeshError(f"facet {facet} is shared by {len(cells)} cells")
    for ci, cell in enumerate(mesh.cells):
        simplex = mesh.cell_simplices[ci]
        members = set(cell)
        for vi, point in enumerate(mesh.vertices):
            if vi in members:
                continue
            coords = _barycentric_of_point(simplex, point)
            if all(x >= 0 for x in coords):
                raise MeshError(
                    f"vertex {vi} lies inside cell {cell}: hanging node"
                )


def _unit_interval(m: int) -> Mesh:
    if m < 1:
        raise MeshError("unit_interval needs at least one cell")
    verts = [(Fraction(j, m),) for j in range(m + 1)]
    return Mesh(1, tuple(verts), tuple((j, j + 1) for j in range(m)))


def _two_triangles() -> Mesh:
    verts = [(0, 0), (1, 0), (0, 1), (1, 1)]
    return Mesh(2, tuple(verts), ((0, 1, 2), (1, 2, 3)))


def _criss_cross() -> Mesh:
    verts = [(0, 0), (1, 0), (0, 1), (1, 1), (Fraction(1, 2), Fraction(1, 2))]
    return Mesh(2, tuple(verts), ((0, 1, 4), (0, 2, 4), (1, 3, 4), (2, 3, 4)))


def _two_tets() -> Mesh:
    verts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]
    return Mesh(3, tuple(verts), ((0, 1, 2, 3), (1, 2, 3, 4)))


def _kuhn_cells(vertex_id) -> list[tuple[int, ...]]:
    """The six path tetrahedra of a unit cube, one per axis permutation."""
    cells = []
    for perm in itertools.permutations(range(3)):
        corner = [0, 0, 0]
        path = [tuple(corner)]
        for axis in perm:
            corner[axis] = 1
            path.append(tuple(corner))
        cells.append(tuple(vertex_id(p) for p in path))
    return cells


def _cube_freudenthal() -> Mesh:
    corners = list(itertools.product((0, 1), repeat=3))
    index = {p: i for i, p in enumerate(corners)}
    cells = _kuhn_cells(lambda p: index[p])
    return Mesh(3, tuple(corners), tuple(cells))


def _fichera_coarse() -> Mesh:
    """Seven Kuhn cubes tiling [0,2]³ minus the far corner cube.

    Translated copies of the same path triangulation match along shared cube
    faces, so the union is conforming without any extra stitching.
    """
    points = [p for p in itertools.product((0, 1, 2), repeat=3) if p != (2, 2, 2)]
    index = {p: i for i, p in enumerate(points)}
    cells: list[tuple[int, ...]] = []
    for offset in itertools.product((0, 1), repeat=3):
        if offset == (1, 1, 1):
            continue

        def vertex_id(p, base=offset):
            return index[tuple(o + x for o, x in zip(base, p))]

        cells.extend(_kuhn_cells(vertex_id))
    return Mesh(3, tuple(points), tuple(cells))


def refine(mesh: Mesh) -> Mesh:
    """One sweep of red refinement with exact rational edge midpoints.

    Intervals halve; triangles split into three corner copies plus the middle
    triangle of midpoints; tetrahedra split into four corner copies plus four
    tetrahedra from the interior octahedron, cut along the diagonal between
    the midpoints of edges 02 and 13.
    """
    n = mesh.dim
    if n > 3:
        raise MeshError("refinement is implemented for dimensions 1 to 3")
    verts = list(mesh.vertices)
    midpoint: dict[tuple[int, int], int] = {}

    def mid(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        got = midpoint.get(key)
        if got is None:
            pa, pb = mesh.vertices[a], mesh.vertices[b]
            verts.append(tuple((x + y) / 2 for x, y in zip(pa, pb)))
            got = midpoint[key] = len(verts) - 1
        return got

    children: list[tuple[int, ...]] = []
    for cell in mesh.cells:
        if n == 1:
            a, b = cell
            m = mid(a, b)
            children += [(a, m), (m, b)]
        elif n == 2:
            a, b, c = cell
            ab, ac, bc = mid(a, b), mid(a, c), mid(b, c)
            children += [(a, ab, ac), (b, ab, bc), (c, ac, bc), (ab, ac, bc)]
        else:
            a, b, c, d = cell
            ab, ac, ad = mid(a, b), mid(a, c), mid(a, d)
            bc, bd, cd = mid(b, c), mid(b, d), mid(c, d)
            children += [
                (a, ab, ac, ad),
                (b, ab, bc, bd),
                (c, ac, bc, cd),
                (d, ad, bd, cd),
                (ab, ac, ad, bd),
                (ab, ac, bc, bd),
                (ac, ad, bd, cd),
                (ac, bc, bd, cd),
            ]
    refined = Mesh(n, tuple(verts), tuple(children))
    validate_mesh(refined)
    return refined


def builtin_mesh(name: str) -> Mesh:
    """Look up a named mesh; refine(...) wrappers nest."""
    text = name.strip()
    if text.startswith("refine(") and text.endswith(")"):
        return refine(builtin_mesh(text[len("refine(") : -1]))
    if text.startswith("unit_interval_"):
        suffix = text[len("unit_interval_") :]
        if not suffix.isdigit():
            raise MeshError(f"bad interval cell count in {name!r}")
        return _unit_interval(int(suffix))
    table = {
        "two_triangles": _two_triangles,
        "criss_cross": _criss_cross,
        "two_tets": _two_tets,
        "cube_freudenthal": _cube_freudenthal,
        "fichera_coarse": _fichera_coarse,
    }
    try:
        mesh = table[text]()
    except KeyError:
        raise MeshError(
            f"unknown mesh {name!r}; builtins: {', '.join(BUILTIN_MESH_NAMES)}"
        ) from None
    validate_mesh(mesh)
    return mesh


def save_mesh(mesh: Mesh, path) -> None:
    data = {
        "dim": mesh.dim,
        "vertices": [
            [[x.numerator, x.denominator] for x in p] for p in mesh.vertices
        ],
        "cells": [list(c) for c in mesh.cells],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle)
        handle.write("\n")


def load_mesh(path) -> Mesh:
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    try:
        verts = [
            tuple(Fraction(int(num), int(den)) for num, den in p)
            for p in data["vertices"]
        ]
        return mesh_from_data(int(data["dim"]), verts, data["cells"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"malformed mesh file {path}: {exc}") from exc


def resolve_mesh(spec: str) -> Mesh:
    """A builtin name, or a path to a mesh JSON file."""
    if os.path.exists(spec):
        return load_mesh(spec)
    return builtin_mesh(spec)

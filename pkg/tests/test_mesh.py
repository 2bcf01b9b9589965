import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from episolve.mesh import (
    BOTTOM,
    LEFT,
    RIGHT,
    TOP,
    Mesh,
    MeshError,
    MeshFormatError,
    interval_mesh,
    read_mesh,
    rectangle_mesh,
    refine_uniform,
    unit_square_mesh,
    write_mesh,
)


def boundary_edges(mesh):
    """Edges that belong to exactly one triangle."""
    c = mesh.cells
    e = np.sort(np.concatenate([c[:, [0, 1]], c[:, [1, 2]], c[:, [2, 0]]]), axis=1)
    edges, counts = np.unique(e, axis=0, return_counts=True)
    return {tuple(x) for x in edges[counts == 1].tolist()}


class TestUnitSquare:
    @pytest.mark.parametrize("n, nv, nc", [(1, 4, 2), (2, 9, 8), (5, 36, 50)])
    def test_counts(self, n, nv, nc):
        m = unit_square_mesh(n)
        assert (m.n_vertices, m.n_cells) == (nv, nc)

    def test_zero_rejected(self):
        with pytest.raises(MeshError):
            unit_square_mesh(0)

    @pytest.mark.parametrize("n", [1, 3, 17, 64, 256])
    def test_area_is_one(self, n):
        assert abs(unit_square_mesh(n).cell_measures().sum() - 1.0) < 1e-12

    def test_counter_clockwise(self):
        assert np.all(unit_square_mesh(7).cell_measures() > 0)

    def test_labels_on_sides(self):
        m = unit_square_mesh(4)
        x = m.vertices
        for lab, check in [(LEFT, x[:, 0] == 0), (RIGHT, x[:, 0] == 1),
                           (TOP, x[:, 1] == 1), (BOTTOM, x[:, 1] == 0)]:
            assert np.array_equal(m.boundary_vertices([lab]), np.flatnonzero(check))

    def test_facets_cover_boundary_once(self):
        m = unit_square_mesh(6)
        facets = [tuple(sorted(f)) for f in m.facets.tolist()]
        assert len(facets) == len(set(facets))
        assert set(facets) == boundary_edges(m)

    def test_rectangle_dimensions(self):
        m = rectangle_mesh(4, 2, width=2.0, height=1.0)
        assert abs(m.cell_measures().sum() - 2.0) < 1e-12
        lo, hi = m.bounding_box()
        assert np.allclose(hi, [2.0, 1.0])


class TestInterval:
    def test_two_cells(self):
        m = interval_mesh(2, 1.0)
        assert np.allclose(m.vertices[:, 0], [0, 0.5, 1])

    def test_spacing(self):
        m = interval_mesh(5000, 1.0)
        assert np.allclose(np.diff(m.vertices[:, 0]), 2e-4)

    def test_single_cell(self):
        m = interval_mesh(1)
        assert m.n_cells == 1
        assert set(m.boundary_vertices().tolist()) == {0, 1}
        assert m.labels() == [LEFT, RIGHT]

    @pytest.mark.parametrize("n, length", [(0, 1.0), (3, 0.0), (3, -1.0)])
    def test_invalid(self, n, length):
        with pytest.raises(MeshError):
            interval_mesh(n, length)


class TestValidation:
    def test_degenerate_triangle(self):
        with pytest.raises(MeshError, match="degenerate"):
            Mesh(2, [[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], np.zeros((0, 2)), [])

    def test_clockwise_triangle(self):
        with pytest.raises(MeshError):
            Mesh(2, [[0, 0], [1, 0], [0, 1]], [[0, 2, 1]], np.zeros((0, 2)), [])

    def test_index_out_of_range(self):
        with pytest.raises(MeshError, match="out of range"):
            Mesh(2, [[0, 0], [1, 0], [0, 1]], [[0, 1, 3]], np.zeros((0, 2)), [])

    def test_immutable(self):
        m = unit_square_mesh(2)
        with pytest.raises(ValueError):
            m.vertices[0, 0] = 5.0


class TestRefine:
    def test_square_counts(self):
        pair = refine_uniform(unit_square_mesh(2))
        assert (pair.fine.n_vertices, pair.fine.n_cells) == (25, 32)

    def test_interval_matches_direct(self):
        pair = refine_uniform(interval_mesh(4, 1.0))
        direct = interval_mesh(8, 1.0)
        assert np.allclose(np.sort(pair.fine.vertices[:, 0]), direct.vertices[:, 0])
        assert pair.fine.n_cells == 8
        assert np.isclose(pair.fine.cell_measures().sum(), 1.0)

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_area_and_count(self, n):
        pair = refine_uniform(unit_square_mesh(n))
        assert pair.fine.n_cells == 4 * pair.coarse.n_cells
        assert abs(pair.fine.cell_measures().sum() - 1.0) < 1e-12

    def test_coarse_vertices_kept(self):
        coarse = unit_square_mesh(3)
        pair = refine_uniform(coarse)
        assert np.array_equal(pair.fine.vertices[: coarse.n_vertices], coarse.vertices)

    def test_coarse_vertex_bary_is_unit(self):
        coarse = unit_square_mesh(3)
        pair = refine_uniform(coarse)
        for v in range(coarse.n_vertices):
            corners = coarse.cells[pair.parent_cell[v]]
            k = int(np.flatnonzero(corners == v)[0])
            assert pair.bary[v, k] == 1.0
            assert pair.bary[v].sum() == 1.0

    @pytest.mark.parametrize("mesh", [unit_square_mesh(4), interval_mesh(6), rectangle_mesh(3, 2, 2.0, 1.0)])
    def test_parent_map_reproduces_coordinates(self, mesh):
        pair = refine_uniform(mesh)
        w = pair.bary
        assert np.all(w >= 0)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
        corners = pair.coarse.vertices[pair.coarse.cells[pair.parent_cell]]
        x = np.einsum("vk,vkd->vd", w, corners)
        assert np.allclose(x, pair.fine.vertices, atol=1e-12)

    def test_boundary_labels_inherited(self):
        pair = refine_uniform(unit_square_mesh(2))
        fine = pair.fine
        assert sorted(fine.labels()) == [LEFT, RIGHT, TOP, BOTTOM]
        assert len(fine.facets) == 2 * len(pair.coarse.facets)
        assert {tuple(sorted(f)) for f in fine.facets.tolist()} == boundary_edges(fine)
        assert np.all(fine.vertices[fine.boundary_vertices([LEFT]), 0] == 0.0)

    def test_deterministic(self):
        a = refine_uniform(unit_square_mesh(3)).fine
        b = refine_uniform(unit_square_mesh(3)).fine
        assert a == b


class TestMeshIO:
    @pytest.mark.parametrize("mesh", [unit_square_mesh(3), interval_mesh(5, 2.0), rectangle_mesh(2, 3, 1.5, 0.7)])
    def test_round_trip(self, tmp_path, mesh):
        path = tmp_path / "m.txt"
        write_mesh(mesh, path)
        assert read_mesh(path) == mesh

    def test_comments_allowed(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("# a triangle\n2 3 1 0\n0 0\n1 0  # x axis\n0 1\n1 2 3\n")
        m = read_mesh(path)
        assert m.n_cells == 1

    def _square_text(self, cell="1 2 3"):
        return f"2 9 1 0\n" + "\n".join(f"{i % 3} {i // 3}" for i in range(9)) + f"\n{cell}\n"

    def test_index_out_of_range(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text(self._square_text("1 2 10"))
        with pytest.raises(MeshFormatError, match="index out of range") as exc:
            read_mesh(path)
        assert exc.value.line == 11

    def test_degenerate(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text(self._square_text("1 2 3"))
        with pytest.raises(MeshFormatError, match="degenerate cell") as exc:
            read_mesh(path)
        assert exc.value.line == 11

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("two 3 1 0\n")
        with pytest.raises(MeshFormatError, match="line 1"):
            read_mesh(path)

    def test_record_count(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("2 3 1 0\n0 0\n1 0\n")
        with pytest.raises(MeshFormatError):
            read_mesh(path)


@settings(max_examples=25, deadline=None)
@given(nx=st.integers(1, 12), ny=st.integers(1, 12),
       w=st.floats(0.1, 10.0), h=st.floats(0.1, 10.0))
def test_rectangle_refinement_properties(nx, ny, w, h):
    m = rectangle_mesh(nx, ny, w, h)
    pair = refine_uniform(m)
    assert np.isclose(pair.fine.cell_measures().sum(), w * h, rtol=1e-12)
    assert pair.fine.n_vertices == (2 * nx + 1) * (2 * ny + 1)
    assert np.all(pair.bary >= 0)
    assert np.allclose(pair.bary.sum(axis=1), 1.0, atol=1e-12)

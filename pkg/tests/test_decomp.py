import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from episolve.decomp import (
    add_overlap,
    build_coarse_space,
    build_restrictions,
    decompose,
    is_connected,
    partition,
)
from episolve.mesh import interval_mesh, rectangle_mesh, refine_uniform, unit_square_mesh


def pou_apply(restr, v):
    out = np.zeros_like(v)
    for R, D in zip(restr.R, restr.D):
        out += R.T @ (D @ (R @ v))
    return out


def bfs_connected(mesh, dofs):
    """Independent connectivity oracle from the cell list."""
    dofs = set(int(v) for v in dofs)
    nbrs = {v: set() for v in dofs}
    for cell in mesh.cells.tolist():
        for a in cell:
            for b in cell:
                if a != b and a in dofs and b in dofs:
                    nbrs[a].add(b)
    start = next(iter(dofs))
    seen, stack = {start}, [start]
    while stack:
        for w in nbrs[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == dofs


class TestPartition:
    def test_single(self):
        m = unit_square_mesh(4)
        d = partition(m, 1)
        assert d.n_sub == 1
        assert np.array_equal(d.subdomain_dofs[0], np.arange(m.n_vertices))

    def test_two_halves_of_25(self):
        d = partition(unit_square_mesh(4), 2)
        assert sorted(len(x) for x in d.subdomain_dofs) == [12, 13]

    def test_quadrants_connected(self):
        m = unit_square_mesh(8)
        d = partition(m, 4)
        for dofs in d.subdomain_dofs:
            assert bfs_connected(m, dofs)
            assert is_connected(m, dofs)
        centers = np.array([m.vertices[x].mean(axis=0) for x in d.subdomain_dofs])
        # one centre per quadrant
        quad = {(bool(cx > 0.5), bool(cy > 0.5)) for cx, cy in centers}
        assert len(quad) == 4

    @pytest.mark.parametrize("n_sub", [2, 3, 5, 8, 16])
    def test_balanced(self, n_sub):
        m = unit_square_mesh(10)
        sizes = [len(x) for x in partition(m, n_sub).subdomain_dofs]
        assert sum(sizes) == m.n_vertices
        assert max(sizes) - min(sizes) <= int(np.ceil(np.log2(n_sub)))

    def test_owner_consistent(self):
        d = partition(unit_square_mesh(6), 5)
        for i, dofs in enumerate(d.subdomain_dofs):
            assert np.all(d.owner[dofs] == i)

    @pytest.mark.parametrize("n_sub", [0, 10])
    def test_out_of_range(self, n_sub):
        with pytest.raises(ValueError):
            partition(unit_square_mesh(2), n_sub)

    def test_deterministic(self):
        a = partition(unit_square_mesh(9), 7)
        b = partition(unit_square_mesh(9), 7)
        assert np.array_equal(a.owner, b.owner)


class TestOverlap:
    def test_single_unchanged(self):
        m = unit_square_mesh(3)
        d = add_overlap(partition(m, 1), m, 1)
        assert np.array_equal(d.subdomain_dofs[0], np.arange(m.n_vertices))

    def test_1d_halves(self):
        m = interval_mesh(10)
        d = partition(m, 2)
        left, right = d.subdomain_dofs
        assert list(left) == list(range(5)) and list(right) == list(range(5, 11))
        o = add_overlap(d, m, 1)
        assert list(o.subdomain_dofs[0]) == list(range(6))
        assert list(o.subdomain_dofs[1]) == list(range(4, 11))
        assert np.array_equal(o.owner, d.owner)

    def test_saturation(self):
        m = unit_square_mesh(4)
        d = add_overlap(partition(m, 4), m, 100)
        for dofs in d.subdomain_dofs:
            assert len(dofs) == m.n_vertices
        again = add_overlap(d, m, 1)
        for a, b in zip(d.subdomain_dofs, again.subdomain_dofs):
            assert np.array_equal(a, b)

    def test_monotone(self):
        m = unit_square_mesh(8)
        d0 = partition(m, 6)
        prev = d0
        for layers in (1, 2, 3):
            cur = add_overlap(d0, m, layers)
            for a, b in zip(prev.subdomain_dofs, cur.subdomain_dofs):
                assert set(a) <= set(b)
            prev = cur

    def test_overlapped_sets_connected(self):
        m = unit_square_mesh(8)
        for dofs in decompose(m, 8, 1).subdomain_dofs:
            assert bfs_connected(m, dofs)


class TestRestrictions:
    def test_single_identity(self):
        m = unit_square_mesh(2)
        r = build_restrictions(decompose(m, 1, 1))
        assert np.array_equal(r.R[0].toarray(), np.eye(m.n_vertices))
        assert np.array_equal(r.D[0].toarray(), np.eye(m.n_vertices))

    def test_unowned_overlap_zero(self):
        m = interval_mesh(10)
        d = decompose(m, 2, 1)
        r = build_restrictions(d)
        # vertex 5 belongs to the right half but is in the left overlap
        loc = int(np.flatnonzero(d.subdomain_dofs[0] == 5)[0])
        assert r.D[0].diagonal()[loc] == 0.0
        assert r.R[0].shape == (6, 11)

    def test_identity_bit_exact(self, rng):
        m = unit_square_mesh(9)
        r = build_restrictions(decompose(m, 6, 2))
        v = rng.standard_normal(m.n_vertices)
        assert np.array_equal(pou_apply(r, v), v)


@settings(max_examples=30, deadline=None)
@given(nx=st.integers(2, 14), ny=st.integers(2, 14), n_sub=st.sampled_from([2, 4, 8, 16]),
       layers=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_partition_of_unity_property(nx, ny, n_sub, layers, seed):
    m = rectangle_mesh(nx, ny)
    n_sub = min(n_sub, m.n_vertices)
    r = build_restrictions(decompose(m, n_sub, layers))
    v = np.random.default_rng(seed).standard_normal(m.n_vertices)
    assert np.array_equal(pou_apply(r, v), v)


class TestCoarseSpace:
    def test_coarse_rows_unit(self):
        coarse = unit_square_mesh(3)
        Z = build_coarse_space(refine_uniform(coarse)).Z
        for v in range(coarse.n_vertices):
            row = Z.getrow(v)
            assert row.nnz == 1 and row.indices[0] == v and row.data[0] == 1.0

    def test_midpoints(self):
        coarse = unit_square_mesh(3)
        Z = build_coarse_space(refine_uniform(coarse)).Z
        for v in range(coarse.n_vertices, Z.shape[0]):
            row = Z.getrow(v)
            assert row.nnz == 2 and np.all(row.data == 0.5)

    @pytest.mark.parametrize("mesh", [unit_square_mesh(5), interval_mesh(7), rectangle_mesh(3, 4, 2.0, 1.0)])
    def test_constants_preserved(self, mesh):
        cs = build_coarse_space(refine_uniform(mesh))
        assert np.allclose(cs.Z @ np.ones(cs.n_coarse), 1.0, atol=1e-14)
        assert np.all(cs.Z.data >= 0)
        assert np.max(np.diff(cs.Z.indptr)) <= mesh.dim + 1
        assert (cs.R0 != cs.Z.T).nnz == 0

    def test_interpolates_linears_exactly(self):
        pair = refine_uniform(unit_square_mesh(4))
        cs = build_coarse_space(pair)
        f = lambda x: 2.0 * x[:, 0] - 3.0 * x[:, 1] + 0.5
        assert np.allclose(cs.Z @ f(pair.coarse.vertices), f(pair.fine.vertices), atol=1e-13)

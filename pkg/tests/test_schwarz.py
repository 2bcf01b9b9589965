import numpy as np
import pytest
import scipy.sparse as sp

from conftest import fem_matrix
from episolve.decomp import CoarseSpace, build_coarse_space, decompose, partition
from episolve.fem import P1Space
from episolve.mesh import rectangle_mesh, refine_uniform, unit_square_mesh
from episolve.schwarz import (
    CoarseCorrection,
    LinearSolver,
    SchwarzPreconditioner,
    SubdomainError,
    TwoGridPreconditioner,
    apply_two_grid,
    build_one_level,
    make_preconditioner,
)
from episolve.sparsela import KrylovConfig, gmres


def dense(op, n):
    return np.column_stack([op(e) for e in np.eye(n)])


def dense_two_grid(M, Q, A):
    """P1 + P2 + P3 - P2 A P1 - P3 A P1 - P3 A P2 + P3 A P2 A P1 with P1 = P3 = M."""
    P1, P2, P3 = M, Q, M
    return P1 + P2 + P3 - P2 @ A @ P1 - P3 @ A @ P1 - P3 @ A @ P2 + P3 @ A @ P2 @ A @ P1


def random_system(rng, nx, ny, n_c):
    """Nonsymmetric matrix on a mesh pattern and a random coarse space."""
    mesh = rectangle_mesh(nx, ny)
    space = P1Space(mesh)
    A = space.stiffness() + space.mass()
    skew = sp.csr_matrix((rng.standard_normal(A.nnz) * 0.05, A.indices, A.indptr), shape=A.shape)
    A = (A + skew).tocsr()
    Z = sp.csr_matrix(rng.random((mesh.n_vertices, n_c)))
    return mesh, A, CoarseSpace(Z, Z.T.tocsr())


class TestOneLevel:
    @pytest.mark.parametrize("variant", ["RAS", "ASM"])
    def test_single_subdomain_exact(self, rng, variant):
        A, space = fem_matrix(6)
        M = build_one_level(A, decompose(space.mesh, 1, 1), variant)
        x = rng.standard_normal(A.shape[0])
        assert np.linalg.norm(M(A @ x) - x) <= 1e-10 * np.linalg.norm(x)
        _, rep = gmres(A, A @ x, M, KrylovConfig(rtol=1e-10))
        assert rep.iterations == 1

    @pytest.mark.parametrize("variant", ["RAS", "ASM"])
    def test_block_diagonal_exact(self, rng, variant):
        mesh = unit_square_mesh(5)
        d = partition(mesh, 2)
        A, _ = fem_matrix(5)
        # drop couplings between the two parts
        same = d.owner[:, None] == d.owner[None, :]
        Ab = sp.csr_matrix(A.toarray() * same)
        M = build_one_level(Ab, d, variant)
        b = rng.standard_normal(A.shape[0])
        assert np.allclose(M(b), np.linalg.solve(Ab.toarray(), b), rtol=1e-12, atol=1e-12)

    def test_local_blocks_are_principal_submatrices(self):
        A, space = fem_matrix(6)
        d = decompose(space.mesh, 3, 1)
        M = build_one_level(A, d)
        for idx, Ai in zip(d.subdomain_dofs, M.local_matrices):
            assert np.array_equal(Ai.toarray(), A.toarray()[np.ix_(idx, idx)])

    def test_ras_not_slower_than_asm(self, rng):
        A, space = fem_matrix(9)  # 100 dofs
        d = decompose(space.mesh, 4, 1)
        b = rng.standard_normal(A.shape[0])
        cfg = KrylovConfig(rtol=1e-8)
        its = {}
        for v in ("RAS", "ASM"):
            _, rep = gmres(A, b, build_one_level(A, d, v), cfg)
            assert rep.converged
            its[v] = rep.iterations
        assert its["RAS"] <= its["ASM"]

    def test_singular_block_named(self):
        A, space = fem_matrix(4)
        A = A.tolil()
        d = decompose(space.mesh, 2, 1)
        v = int(np.setdiff1d(d.subdomain_dofs[1], d.subdomain_dofs[0])[0])
        A[v, :] = 0.0
        with pytest.raises(SubdomainError, match="subdomain 1"):
            build_one_level(A.tocsr(), d)

    @pytest.mark.parametrize("variant", ["RAS", "ASM"])
    def test_threads_identical(self, rng, variant):
        A, space = fem_matrix(12)
        d = decompose(space.mesh, 8, 1)
        b = rng.standard_normal(A.shape[0])
        one = build_one_level(A, d, variant, threads=1)(b)
        pc = build_one_level(A, d, variant, threads=4)
        try:
            assert np.array_equal(pc(b), one)
        finally:
            pc.close()

    def test_unknown_variant(self):
        A, space = fem_matrix(3)
        with pytest.raises(ValueError):
            build_one_level(A, decompose(space.mesh, 2, 1), "RASX")


class TestTwoGrid:
    def test_dense_oracle_60(self, rng):
        mesh, A, cs = random_system(rng, 9, 5, 12)  # 60 dofs
        M = build_one_level(A, decompose(mesh, 4, 1))
        Q = CoarseCorrection(A, cs, "direct")
        r = rng.standard_normal(A.shape[0])
        Ad = A.toarray()
        ref = dense_two_grid(dense(M, len(r)), dense(Q, len(r)), Ad) @ r
        z = apply_two_grid(M, Q, A, r)
        assert np.linalg.norm(z - ref) <= 1e-12 * np.linalg.norm(ref)

    def test_q_zero_is_two_sweeps(self, rng):
        A, space = fem_matrix(6)
        M = build_one_level(A, decompose(space.mesh, 3, 1))
        r = rng.standard_normal(A.shape[0])
        z = apply_two_grid(M, lambda w: np.zeros_like(w), A, r)
        expected = M(r) + M(r - A @ M(r))
        assert np.allclose(z, expected, rtol=1e-14, atol=1e-14)

    def test_exact_smoother_absorbs_correction(self, rng):
        mesh, A, cs = random_system(rng, 6, 6, 8)
        Ad = A.toarray()
        Minv = lambda v: np.linalg.solve(Ad, v)
        Q = CoarseCorrection(A, cs, "direct")
        r = rng.standard_normal(A.shape[0])
        assert np.allclose(apply_two_grid(Minv, Q, A, r), Minv(r), rtol=1e-10)

    def test_geometric_coarse_space(self, rng):
        pair = refine_uniform(unit_square_mesh(4))
        space = P1Space(pair.fine)
        A = space.stiffness() + space.mass()
        cs = build_coarse_space(pair)
        M = build_one_level(A, decompose(pair.fine, 4, 1))
        Q = CoarseCorrection(A, cs, "direct")
        r = rng.standard_normal(A.shape[0])
        ref = dense_two_grid(dense(M, len(r)), dense(Q, len(r)), A.toarray()) @ r
        assert np.linalg.norm(TwoGridPreconditioner(A, M, Q)(r) - ref) <= 1e-12 * np.linalg.norm(ref)


class TestCoarseCorrection:
    def test_galerkin_operator(self, rng):
        mesh, A, cs = random_system(rng, 5, 4, 7)
        Q = CoarseCorrection(A, cs)
        assert np.allclose(Q.Ac.toarray(), cs.Z.T.toarray() @ A.toarray() @ cs.Z.toarray(), rtol=1e-13)

    def test_orthogonal_input(self, rng):
        n = 30
        Z = sp.csr_matrix(np.vstack([np.eye(5), np.zeros((n - 5, 5))]))
        A = sp.identity(n, format="csr") * 2.0
        Q = CoarseCorrection(A, CoarseSpace(Z, Z.T.tocsr()))
        w = np.zeros(n)
        w[5:] = rng.standard_normal(n - 5)
        assert not np.any(Q(w))

    def test_constant_coarse_space(self, rng):
        A, space = fem_matrix(5)
        n = A.shape[0]
        Z = sp.csr_matrix(np.ones((n, 1)))
        Q = CoarseCorrection(A, CoarseSpace(Z, Z.T.tocsr()))
        w = rng.standard_normal(n)
        Ac = float(np.ones(n) @ (A @ np.ones(n)))
        assert np.allclose(Q(w), np.ones(n) * (w.sum() / Ac), rtol=1e-13)

    def test_amg_agrees_with_direct(self, rng):
        pair = refine_uniform(unit_square_mesh(16))
        space = P1Space(pair.fine)
        A = space.stiffness() + 10 * space.mass()
        cs = build_coarse_space(pair)
        w = rng.standard_normal(A.shape[0])
        direct = CoarseCorrection(A, cs, "direct")(w)
        amgQ = CoarseCorrection(A, cs, "amg", KrylovConfig(rtol=1e-6), amg_options=dict(coarse_size=16))
        out = amgQ(w)
        assert amgQ.stats.unconverged == 0
        assert np.linalg.norm(out - direct) <= 1e-4 * np.linalg.norm(direct)

    def test_ras_coarse_solver_records_iterations(self, rng):
        pair = refine_uniform(unit_square_mesh(16))
        space = P1Space(pair.fine)
        A = space.stiffness() + 10 * space.mass()
        Q = CoarseCorrection(A, build_coarse_space(pair), "ras",
                             coarse_decomposition=decompose(pair.coarse, 4, 1))
        Q(rng.standard_normal(A.shape[0]))
        Q(rng.standard_normal(A.shape[0]))
        assert Q.stats.solves == 2 and len(Q.stats.inner_iterations) == 2

    def test_inner_cap(self, rng):
        pair = refine_uniform(unit_square_mesh(16))
        space = P1Space(pair.fine)
        A = space.stiffness() + 1e-3 * space.mass()
        Q = CoarseCorrection(A, build_coarse_space(pair), "ras", KrylovConfig(rtol=1e-14, max_inner=3),
                             coarse_decomposition=decompose(pair.coarse, 4, 1))
        out = Q(rng.standard_normal(A.shape[0]))
        assert np.all(np.isfinite(out))
        assert Q.stats.inner_iterations == [3] and Q.stats.unconverged == 1

    def test_unknown_solver(self, rng):
        mesh, A, cs = random_system(rng, 3, 3, 4)
        with pytest.raises(ValueError):
            CoarseCorrection(A, cs, "lu")


class TestMakePreconditioner:
    @pytest.fixture
    def setup(self):
        pair = refine_uniform(unit_square_mesh(8))
        space = P1Space(pair.fine)
        A = space.stiffness() + space.mass()
        return A, decompose(pair.fine, 4, 1), build_coarse_space(pair), decompose(pair.coarse, 4, 1)

    def test_ras1_is_one_level(self, setup, rng):
        A, d, cs, _ = setup
        M, rep = make_preconditioner("OneLevelRAS", A, d)
        ref = build_one_level(A, d, "RAS")
        r = rng.standard_normal(A.shape[0])
        assert isinstance(M, SchwarzPreconditioner) and np.array_equal(M(r), ref(r))
        assert rep.local_seconds > 0 and rep.coarse_seconds == 0

    @pytest.mark.parametrize("kind, solver", [("TwoGridRAS", "direct"), ("TwoGridRASV2", "ras"),
                                              ("TwoGridRASV3", "amg")])
    def test_two_grid_kinds(self, setup, kind, solver):
        A, d, cs, dc = setup
        M, rep = make_preconditioner(kind, A, d, cs, coarse_decomposition=dc)
        assert isinstance(M, TwoGridPreconditioner) and M.coarse.solver == solver
        assert rep.total == rep.local_seconds + rep.coarse_seconds

    def test_v3_uses_vcycle(self, setup):
        from episolve.amg import AmgHierarchy

        A, d, cs, _ = setup
        M, _ = make_preconditioner("ras2-v3", A, d, cs)
        assert isinstance(M.coarse.pc, AmgHierarchy)

    def test_missing_pieces(self, setup):
        A, d, cs, _ = setup
        with pytest.raises(ValueError, match="coarse space"):
            make_preconditioner("ras2", A, d)
        with pytest.raises(ValueError, match="decomposition"):
            make_preconditioner("ras1", A)
        with pytest.raises(ValueError, match="unknown"):
            make_preconditioner("ilu", A, d)


class TestLinearSolver:
    @pytest.mark.parametrize("pc", ["none", "asm", "ras1", "ras2", "ras2-v2", "ras2-v3", "direct"])
    def test_all_kinds_solve(self, rng, pc):
        pair = refine_uniform(unit_square_mesh(8))
        space = P1Space(pair.fine)
        A = space.stiffness() + space.mass()
        b = rng.standard_normal(A.shape[0])
        solver = LinearSolver(pair.fine, pc=pc, subdomains=4, coarse_pair=pair)
        x, info = solver.solve(A, b)
        assert info.converged
        assert np.linalg.norm(A @ x - b) < 1e-5 * np.linalg.norm(b)
        assert solver.flexible == (pc in ("ras2-v2", "ras2-v3"))

    def test_two_grid_needs_pair(self):
        with pytest.raises(ValueError, match="nested"):
            LinearSolver(unit_square_mesh(4), pc="ras2")

    def test_pair_mismatch(self):
        pair = refine_uniform(unit_square_mesh(4))
        with pytest.raises(ValueError, match="match"):
            LinearSolver(unit_square_mesh(4), pc="ras2", coarse_pair=pair)

    def test_two_grid_beats_one_level(self, rng):
        pair = refine_uniform(unit_square_mesh(24))
        space = P1Space(pair.fine)
        A = space.stiffness() + 1e-2 * space.mass()
        b = rng.standard_normal(A.shape[0])
        its = {}
        for pc in ("ras1", "ras2", "ras2-v3"):
            _, info = LinearSolver(pair.fine, pc, 16, coarse_pair=pair).solve(A, b)
            its[pc] = info.iterations
        assert its["ras2"] < its["ras1"] and its["ras2-v3"] < its["ras1"]

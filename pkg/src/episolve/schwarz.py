"""Overlapping Schwarz preconditioners.

One-level additive (ASM) and restricted additive (RAS) Schwarz, a Galerkin
coarse correction on a nested grid, and the multiplicative two-grid
composition (RAS pre-smoother, coarse correction, RAS post-smoother).  The
coarse problem is solved directly, by RAS-preconditioned GMRES (V2) or by
AMG-preconditioned GMRES (V3).
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from episolve import amg
from episolve.decomp import build_restrictions, decompose
from episolve.sparsela import KrylovConfig, LUFactor, SingularMatrixError, fgmres, gmres

__all__ = [
    "PC_KINDS",
    "SchwarzPreconditioner",
    "CoarseCorrection",
    "TwoGridPreconditioner",
    "SetupReport",
    "build_one_level",
    "apply_two_grid",
    "make_preconditioner",
    "LinearSolver",
    "SolveInfo",
]

PC_KINDS = ("none", "asm", "ras1", "ras2", "ras2-v2", "ras2-v3", "direct")

_ALIASES = {
    "OneLevelRAS": "ras1",
    "OneLevelASM": "asm",
    "TwoGridRAS": "ras2",
    "TwoGridRASV2": "ras2-v2",
    "TwoGridRASV3": "ras2-v3",
}


class SubdomainError(SingularMatrixError):
    pass


class SchwarzPreconditioner:
    """Action v -> sum_i R_i^T [D_i] (R_i A R_i^T)^-1 R_i v.

    With ``variant="RAS"`` each subdomain writes only the dofs it owns, so
    contributions are disjoint and the result does not depend on the order
    in which the local solves finish.
    """

    def __init__(self, A, restrictions, variant="RAS", threads=1):
        if variant not in ("RAS", "ASM"):
            raise ValueError(f"unknown variant {variant!r}")
        A = sp.csr_matrix(A)
        self.variant = variant
        self.n = A.shape[0]
        self.dofs = restrictions.dofs
        self.owned = restrictions.owned
        self.threads = max(1, int(threads))
        self._pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None
        self.local = []
        self.local_matrices = []
        for k, idx in enumerate(self.dofs):
            Ai = A[idx][:, idx]
            self.local_matrices.append(Ai)
        self.local = self._map(self._factor, range(len(self.dofs)))

    def _factor(self, k):
        try:
            return LUFactor(self.local_matrices[k])
        except SingularMatrixError as exc:
            raise SubdomainError(f"subdomain {k}: singular local matrix ({exc})") from None

    def _map(self, fn, items):
        if self._pool is None:
            return [fn(x) for x in items]
        return list(self._pool.map(fn, items))

    def __call__(self, v):
        v = np.asarray(v, float)
        z = np.zeros(self.n)
        if self.variant == "RAS":

            def work(k):
                idx = self.dofs[k]
                own = self.owned[k]
                z[idx[own]] = self.local[k].solve(v[idx])[own]

            self._map(work, range(len(self.dofs)))
        else:
            parts = self._map(lambda k: self.local[k].solve(v[self.dofs[k]]), range(len(self.dofs)))
            for idx, loc in zip(self.dofs, parts):
                z[idx] += loc
        return z

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None


def build_one_level(A, decomposition, variant="RAS", threads=1):
    return SchwarzPreconditioner(A, build_restrictions(decomposition), variant, threads)


@dataclass
class CoarseStats:
    solves: int = 0
    inner_iterations: list = field(default_factory=list)
    unconverged: int = 0


class CoarseCorrection:
    """Q w = Z A_c^-1 Z^T w with A_c = Z^T A Z.

    ``solver`` is ``"direct"``, ``"ras"`` (GMRES + one-level RAS on a
    decomposition of the coarse dofs) or ``"amg"`` (GMRES + one AMG V-cycle
    per iteration).  Iterative coarse solves start from zero and stop at the
    inner tolerance or the inner iteration cap, whichever comes first.
    """

    def __init__(self, A, coarse_space, solver="direct", cfg=None, coarse_decomposition=None,
                 amg_options=None, threads=1):
        self.Z = coarse_space.Z
        self.R0 = coarse_space.R0
        self.Ac = (self.R0 @ sp.csr_matrix(A) @ self.Z).tocsr()
        self.Ac.sort_indices()
        self.solver = solver
        self.cfg = (cfg or KrylovConfig()).inner()
        self.stats = CoarseStats()
        self.pc = None
        if solver == "direct":
            self.lu = LUFactor(self.Ac)
        elif solver == "ras":
            if coarse_decomposition is None:
                raise ValueError("RAS coarse solver needs a decomposition of the coarse dofs")
            self.pc = build_one_level(self.Ac, coarse_decomposition, "RAS", threads)
        elif solver == "amg":
            self.pc = amg.amg_setup(self.Ac, **(amg_options or {}))
        else:
            raise ValueError(f"unknown coarse solver {solver!r}")

    def solve_coarse(self, rc):
        if self.solver == "direct":
            return self.lu.solve(rc)
        yc, rep = gmres(self.Ac, rc, self.pc, self.cfg)
        self.stats.inner_iterations.append(rep.iterations)
        if not rep.converged:
            self.stats.unconverged += 1
        return yc

    def __call__(self, w):
        self.stats.solves += 1
        rc = self.R0 @ np.asarray(w, float)
        if not np.any(rc):
            return np.zeros(self.Z.shape[0])
        return self.Z @ self.solve_coarse(rc)


def apply_two_grid(M_ras, Q, A, r):
    """Pre-smooth, coarse-correct, post-smooth, starting from zero."""
    z1 = M_ras(r)
    z2 = z1 + Q(r - A @ z1)
    return z2 + M_ras(r - A @ z2)


class TwoGridPreconditioner:
    def __init__(self, A, smoother, coarse):
        self.A = A
        self.smoother = smoother
        self.coarse = coarse

    def __call__(self, r):
        return apply_two_grid(self.smoother, self.coarse, self.A, r)


@dataclass
class SetupReport:
    local_seconds: float = 0.0
    coarse_seconds: float = 0.0

    @property
    def total(self):
        return self.local_seconds + self.coarse_seconds


def _canonical(kind):
    kind = _ALIASES.get(kind, kind)
    if kind not in PC_KINDS:
        raise ValueError(f"unknown preconditioner kind {kind!r}; choose from {', '.join(PC_KINDS)}")
    return kind


def make_preconditioner(kind, A, decomposition=None, coarse_space=None, cfg=None,
                        coarse_decomposition=None, amg_options=None, threads=1):
    """Build a preconditioner action of the given kind and time its setup.

    Returns ``(action, SetupReport)``; ``action`` is None for ``"none"``.
    """
    kind = _canonical(kind)
    rep = SetupReport()
    if kind == "none":
        return None, rep
    if kind == "direct":
        t0 = time.perf_counter()
        lu = LUFactor(A)
        rep.local_seconds = time.perf_counter() - t0
        return lu.solve, rep
    if decomposition is None:
        raise ValueError(f"{kind} needs a decomposition")
    t0 = time.perf_counter()
    variant = "ASM" if kind == "asm" else "RAS"
    one = build_one_level(A, decomposition, variant, threads)
    rep.local_seconds = time.perf_counter() - t0
    if kind in ("asm", "ras1"):
        return one, rep
    if coarse_space is None:
        raise ValueError(f"{kind} needs a coarse space")
    t0 = time.perf_counter()
    solver = {"ras2": "direct", "ras2-v2": "ras", "ras2-v3": "amg"}[kind]
    Q = CoarseCorrection(A, coarse_space, solver, cfg, coarse_decomposition, amg_options, threads)
    rep.coarse_seconds = time.perf_counter() - t0
    return TwoGridPreconditioner(A, one, Q), rep


@dataclass
class SolveInfo:
    iterations: int
    converged: bool
    final_residual_norm: float
    setup_seconds: float
    solve_seconds: float
    coarse_iterations: list = field(default_factory=list)
    coarse_unconverged: int = 0


class LinearSolver:
    """Preconditioned Krylov solve of one compartment system.

    Decompositions of the fine and coarse meshes are computed once and
    reused for every matrix handed to :meth:`solve`.
    """

    def __init__(self, mesh, pc="ras2-v3", subdomains=4, overlap=1, cfg=None,
                 coarse_pair=None, amg_options=None, threads=1):
        from episolve.decomp import build_coarse_space

        self.pc = _canonical(pc)
        self.cfg = cfg or KrylovConfig()
        self.threads = threads
        self.amg_options = amg_options or {}
        self.decomposition = None
        self.coarse_space = None
        self.coarse_decomposition = None
        if self.pc not in ("none", "direct"):
            self.decomposition = decompose(mesh, subdomains, overlap)
        if self.pc in ("ras2", "ras2-v2", "ras2-v3"):
            if coarse_pair is None:
                raise ValueError("two-grid preconditioners need a nested mesh pair")
            if coarse_pair.fine.n_vertices != mesh.n_vertices:
                raise ValueError("nested pair does not match the fine mesh")
            self.coarse_space = build_coarse_space(coarse_pair)
            if self.pc == "ras2-v2":
                nc = coarse_pair.coarse.n_vertices
                self.coarse_decomposition = decompose(coarse_pair.coarse, min(subdomains, nc), overlap)

    @property
    def flexible(self):
        return self.pc in ("ras2-v2", "ras2-v3")

    def solve(self, A, b, x0=None):
        if self.pc == "direct":
            t0 = time.perf_counter()
            lu = LUFactor(A)
            t1 = time.perf_counter()
            x = lu.solve(b)
            t2 = time.perf_counter()
            res = float(np.linalg.norm(b - A @ x))
            return x, SolveInfo(0, True, res, t1 - t0, t2 - t1)
        M, setup = make_preconditioner(
            self.pc, A, self.decomposition, self.coarse_space, self.cfg,
            self.coarse_decomposition, self.amg_options, self.threads,
        )
        krylov = fgmres if self.flexible else gmres
        t0 = time.perf_counter()
        x, rep = krylov(A, b, M, self.cfg, x0)
        elapsed = time.perf_counter() - t0
        info = SolveInfo(rep.iterations, rep.converged, rep.final_residual_norm, setup.total, elapsed)
        if isinstance(M, TwoGridPreconditioner):
            info.coarse_iterations = list(M.coarse.stats.inner_iterations)
            info.coarse_unconverged = M.coarse.stats.unconverged
        for obj in (M, getattr(M, "smoother", None), getattr(getattr(M, "coarse", None), "pc", None)):
            if isinstance(obj, SchwarzPreconditioner):
                obj.close()
        return x, info

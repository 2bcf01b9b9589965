"""Smoothed-aggregation algebraic multigrid, used as a V-cycle preconditioner."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from episolve.sparsela import LUFactor

log = logging.getLogger(__name__)

__all__ = ["AmgHierarchy", "amg_setup", "amg_vcycle", "strength_graph", "aggregate"]


@dataclass
class AmgLevel:
    A: sp.csr_matrix
    P: sp.csr_matrix | None = None
    R: sp.csr_matrix | None = None
    diag: np.ndarray | None = None


@dataclass
class AmgHierarchy:
    levels: list
    coarse_solver: LUFactor
    presmooth: int = 1
    postsmooth: int = 1
    omega: float = 2.0 / 3.0
    notes: list = field(default_factory=list)

    @property
    def n_levels(self):
        return len(self.levels)

    def sizes(self):
        return [lvl.A.shape[0] for lvl in self.levels]

    def __call__(self, r):
        return amg_vcycle(self, r)


def strength_graph(A, theta):
    """Off-diagonal entries with |a_ij| >= theta * sqrt(|a_ii a_jj|)."""
    A = A.tocoo()
    d = np.abs(A.tocsr().diagonal())
    off = A.row != A.col
    r, c, v = A.row[off], A.col[off], A.data[off]
    strong = np.abs(v) >= theta * np.sqrt(d[r] * d[c])
    S = sp.csr_matrix(
        (np.ones(strong.sum(), bool), (r[strong], c[strong])), shape=A.shape
    )
    S = S + S.T  # symmetrise so aggregates are well defined for nonsymmetric A
    S.sort_indices()
    return S.astype(bool)


def aggregate(S):
    """Greedy three-pass aggregation; isolated nodes get label -1."""
    n = S.shape[0]
    indptr, indices = S.indptr, S.indices
    agg = np.full(n, -1, np.int64)
    count = 0
    # pass 1: seed aggregates whose whole neighbourhood is still free
    for i in range(n):
        if agg[i] >= 0:
            continue
        nb = indices[indptr[i]:indptr[i + 1]]
        if nb.size == 0:
            continue
        if np.all(agg[nb] < 0):
            agg[i] = count
            agg[nb] = count
            count += 1
    # pass 2: attach leftovers to a neighbouring aggregate
    pending = np.flatnonzero(agg < 0)
    snapshot = agg.copy()
    for i in pending:
        nb = indices[indptr[i]:indptr[i + 1]]
        taken = snapshot[nb]
        taken = taken[taken >= 0]
        if taken.size:
            agg[i] = taken[0]
    # pass 3: remaining connected nodes form their own aggregates
    for i in np.flatnonzero(agg < 0):
        nb = indices[indptr[i]:indptr[i + 1]]
        if nb.size == 0:
            continue
        agg[i] = count
        free = nb[agg[nb] < 0]
        agg[free] = count
        count += 1
    return agg, count


def _tentative(agg, n_agg):
    n = len(agg)
    rows = np.flatnonzero(agg >= 0)
    cols = agg[rows]
    sizes = np.bincount(cols, minlength=n_agg).astype(float)
    vals = 1.0 / np.sqrt(sizes[cols])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n_agg))


def amg_setup(A, theta=0.08, max_levels=10, coarse_size=64, omega=2.0 / 3.0):
    """Build a smoothed-aggregation hierarchy for ``A``.

    The prolongator is the piecewise-constant tentative interpolation
    smoothed by one damped-Jacobi step with weight (4/3)/rho, where rho is
    the Gershgorin bound on the spectral radius of D^-1 A.
    """
    A = sp.csr_matrix(A, dtype=float)
    A.sort_indices()
    if A.shape[0] != A.shape[1]:
        raise ValueError("AMG needs a square matrix")
    d = A.diagonal()
    if np.any(d == 0.0):
        raise ZeroDivisionError(f"zero diagonal entry at row {int(np.argmax(d == 0.0))}")

    levels = []
    notes = []
    while True:
        lvl = AmgLevel(A, diag=A.diagonal())
        levels.append(lvl)
        n = A.shape[0]
        if n <= coarse_size or len(levels) >= max_levels:
            break
        S = strength_graph(A, theta)
        agg, n_agg = aggregate(S)
        if n_agg == 0:
            notes.append("no strong connections; hierarchy stops")
            break
        if n_agg > 0.9 * n:
            msg = f"coarsening stagnated at level {len(levels) - 1} ({n} -> {n_agg})"
            log.warning(msg)
            notes.append(msg)
            break
        T = _tentative(agg, n_agg)
        Dinv = sp.diags(1.0 / lvl.diag)
        DinvA = (Dinv @ A).tocsr()
        rho = float(np.max(np.abs(DinvA).sum(axis=1)))
        P = (T - (4.0 / 3.0 / rho) * (DinvA @ T)).tocsr()
        P.sort_indices()
        R = P.T.tocsr()
        lvl.P, lvl.R = P, R
        A = (R @ A @ P).tocsr()
        A.sort_indices()
    return AmgHierarchy(levels, LUFactor(levels[-1].A), omega=omega, notes=notes)


def _smooth(A, d, b, x, sweeps, omega):
    for _ in range(sweeps):
        x = x + omega * (b - A @ x) / d
    return x


def amg_vcycle(h, r, level=0):
    """One V(1,1)-cycle from a zero initial guess: an approximation of A^-1 r."""
    lvl = h.levels[level]
    if level == h.n_levels - 1:
        return h.coarse_solver.solve(r)
    x = _smooth(lvl.A, lvl.diag, r, np.zeros_like(r, dtype=float), h.presmooth, h.omega)
    rc = lvl.R @ (r - lvl.A @ x)
    x = x + lvl.P @ amg_vcycle(h, rc, level + 1)
    return _smooth(lvl.A, lvl.diag, r, x, h.postsmooth, h.omega)

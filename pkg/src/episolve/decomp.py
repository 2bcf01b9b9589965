"""Overlapping vertex decompositions and the fine/coarse transfer operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Decomposition",
    "Restrictions",
    "CoarseSpace",
    "partition",
    "add_overlap",
    "decompose",
    "build_restrictions",
    "build_coarse_space",
    "is_connected",
]


@dataclass(frozen=True)
class Decomposition:
    n_sub: int
    subdomain_dofs: tuple  # sorted int arrays, overlap included
    owner: np.ndarray
    overlap_layers: int = 0

    @property
    def n(self):
        return len(self.owner)


@dataclass(frozen=True)
class Restrictions:
    """Boolean restriction matrices R_i and partition-of-unity diagonals D_i.

    ``owned[i]`` is the boolean diagonal of D_i in local numbering.
    """

    R: tuple
    D: tuple
    dofs: tuple
    owned: tuple


@dataclass(frozen=True)
class CoarseSpace:
    """Interpolation Z (n x n_c) from coarse to fine nodal values, R0 = Z^T."""

    Z: sp.csr_matrix
    R0: sp.csr_matrix
    coarse_mesh: object = None

    @property
    def n_coarse(self):
        return self.Z.shape[1]


def partition(mesh, n_sub):
    """Recursive coordinate bisection of the mesh vertices.

    Each split cuts the current vertex set across the longest side of its
    bounding box at the (weighted) median; ties go to the lower subdomain.
    """
    n = mesh.n_vertices
    if not 1 <= n_sub <= n:
        raise ValueError(f"n_sub must be in [1, {n}], got {n_sub}")
    x = mesh.vertices
    owner = np.empty(n, np.int64)

    def split(ids, k, first):
        if k == 1:
            owner[ids] = first
            return
        pts = x[ids]
        ext = pts.max(axis=0) - pts.min(axis=0)
        axis = int(np.argmax(ext))
        keys = [ids] + [pts[:, d] for d in range(mesh.dim) if d != axis] + [pts[:, axis]]
        order = ids[np.lexsort(keys)]
        k_lo = k // 2
        m = (len(ids) * k_lo) // k
        split(order[:m], k_lo, first)
        split(order[m:], k - k_lo, first + k_lo)

    split(np.arange(n), n_sub, 0)
    dofs = tuple(np.flatnonzero(owner == i) for i in range(n_sub))
    return Decomposition(n_sub, dofs, owner, 0)


def add_overlap(d, mesh, layers=1):
    """Grow every subdomain by ``layers`` rings of adjacent vertices."""
    if layers < 0:
        raise ValueError("layers must be >= 0")
    adj = mesh.adjacency().astype(np.int8)
    grown = []
    for dofs in d.subdomain_dofs:
        mask = np.zeros(d.n, bool)
        mask[dofs] = True
        for _ in range(layers):
            new = (adj @ mask.astype(np.int8)) > 0
            if not np.any(new & ~mask):
                break
            mask |= new
        grown.append(np.flatnonzero(mask))
    return Decomposition(d.n_sub, tuple(grown), d.owner, d.overlap_layers + layers)


def decompose(mesh, n_sub, overlap=1):
    return add_overlap(partition(mesh, n_sub), mesh, overlap)


def build_restrictions(d, n=None):
    n = d.n if n is None else n
    R, D, owned = [], [], []
    for i, dofs in enumerate(d.subdomain_dofs):
        m = len(dofs)
        R.append(sp.csr_matrix((np.ones(m), (np.arange(m), dofs)), shape=(m, n)))
        own = d.owner[dofs] == i
        owned.append(own)
        D.append(sp.diags(own.astype(float), format="csr"))
    return Restrictions(tuple(R), tuple(D), d.subdomain_dofs, tuple(owned))


def build_coarse_space(pair):
    """Z from the barycentric parent map of a nested mesh pair."""
    coarse = pair.coarse
    nf = pair.fine.n_vertices
    corners = coarse.cells[pair.parent_cell]
    w = pair.bary
    rows = np.repeat(np.arange(nf), corners.shape[1])
    keep = w.ravel() != 0.0
    Z = sp.csr_matrix(
        (w.ravel()[keep], (rows[keep], corners.ravel()[keep])), shape=(nf, coarse.n_vertices)
    )
    Z.sum_duplicates()
    Z.sort_indices()
    return CoarseSpace(Z, Z.T.tocsr(), coarse)


def is_connected(mesh, dofs):
    """Breadth-first check that ``dofs`` induce a connected vertex graph."""
    dofs = np.asarray(dofs)
    if len(dofs) <= 1:
        return True
    adj = mesh.adjacency()
    inside = np.zeros(mesh.n_vertices, bool)
    inside[dofs] = True
    seen = np.zeros(mesh.n_vertices, bool)
    seen[dofs[0]] = True
    frontier = [int(dofs[0])]
    while frontier:
        nxt = []
        for v in frontier:
            nb = adj.indices[adj.indptr[v]:adj.indptr[v + 1]]
            nb = nb[inside[nb] & ~seen[nb]]
            seen[nb] = True
            nxt.extend(nb.tolist())
        frontier = nxt
    return bool(seen[dofs].all())

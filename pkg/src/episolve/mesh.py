"""Simplicial meshes in 1D (intervals) and 2D (triangles).

Meshes are immutable containers of numpy arrays.  Boundary facets carry an
integer label; what a label means (Dirichlet, Neumann, ...) is decided by
the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "MeshFormatError",
    "NestedMeshPair",
    "unit_square_mesh",
    "rectangle_mesh",
    "interval_mesh",
    "refine_uniform",
    "read_mesh",
    "write_mesh",
]

LEFT, RIGHT, TOP, BOTTOM = 1, 2, 3, 4


class MeshError(ValueError):
    pass


class MeshFormatError(MeshError):
    def __init__(self, msg, line=None):
        self.line = line
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """A 1D or 2D simplicial mesh.

    ``vertices`` has shape (nv, dim), ``cells`` (nc, dim + 1),
    ``facets`` (nb, dim) and ``facet_labels`` (nb,).  In 1D a facet is a
    single vertex.
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    facets: np.ndarray
    facet_labels: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise MeshError(f"dim must be 1 or 2, got {self.dim}")
        v = _frozen(self.vertices, float).reshape(-1, self.dim)
        c = _frozen(self.cells, np.int64).reshape(-1, self.dim + 1)
        f = _frozen(self.facets, np.int64).reshape(-1, self.dim)
        lab = _frozen(self.facet_labels, np.int64).reshape(-1)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "cells", c)
        object.__setattr__(self, "facets", f)
        object.__setattr__(self, "facet_labels", lab)
        if len(f) != len(lab):
            raise MeshError("facets and facet_labels differ in length")
        nv = len(v)
        for arr, what in ((c, "cell"), (f, "facet")):
            if arr.size and (arr.min() < 0 or arr.max() >= nv):
                raise MeshError(f"{what} index out of range")
        if np.any(self.cell_measures() <= 0.0):
            bad = int(np.argmax(self.cell_measures() <= 0.0))
            raise MeshError(f"degenerate or clockwise cell {bad}")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    def cell_measures(self):
        """Signed length (1D) or signed area (2D) of every cell."""
        x = self.vertices[self.cells]
        if self.dim == 1:
            return x[:, 1, 0] - x[:, 0, 0]
        d1 = x[:, 1] - x[:, 0]
        d2 = x[:, 2] - x[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def boundary_vertices(self, labels=None):
        """Sorted vertex indices on facets with the given labels (all if None)."""
        sel = np.ones(len(self.facets), bool)
        if labels is not None:
            sel = np.isin(self.facet_labels, list(labels))
        return np.unique(self.facets[sel])

    def labels(self):
        return sorted(set(self.facet_labels.tolist()))

    def adjacency(self):
        """Symmetric vertex adjacency as a boolean CSR matrix (no diagonal)."""
        import scipy.sparse as sp

        k = self.dim + 1
        rows = np.repeat(self.cells, k, axis=1).ravel()
        cols = np.tile(self.cells, (1, k)).ravel()
        keep = rows != cols
        n = self.n_vertices
        adj = sp.csr_matrix(
            (np.ones(keep.sum(), bool), (rows[keep], cols[keep])), shape=(n, n)
        )
        adj.sum_duplicates()
        return adj

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.facets, other.facets)
            and np.array_equal(self.facet_labels, other.facet_labels)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class NestedMeshPair:
    """A coarse mesh and its uniform ratio-2 refinement.

    For every fine vertex ``parent_cell[v]`` is a coarse cell containing it
    and ``bary[v]`` its barycentric coordinates in that cell.
    """

    coarse: Mesh
    fine: Mesh
    parent_cell: np.ndarray
    bary: np.ndarray


def rectangle_mesh(nx, ny, width=1.0, height=1.0):
    """Structured triangulation of [0, width] x [0, height].

    Labels: left=1, right=2, top=3, bottom=4.
    """
    if nx < 1 or ny < 1:
        raise MeshError("need at least one cell per side")
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.empty((2 * len(i), 3), np.int64)
    cells[0::2] = lower
    cells[1::2] = upper

    a = np.arange(ny)
    b = np.arange(nx)
    facets = np.concatenate([
        np.column_stack([vid(0, a), vid(0, a + 1)]),
        np.column_stack([vid(nx, a), vid(nx, a + 1)]),
        np.column_stack([vid(b, ny), vid(b + 1, ny)]),
        np.column_stack([vid(b, 0), vid(b + 1, 0)]),
    ])
    labels = np.repeat([LEFT, RIGHT, TOP, BOTTOM], [ny, ny, nx, nx])
    return Mesh(2, verts, cells, facets, labels)


def unit_square_mesh(n):
    """(n+1)^2 vertices, 2n^2 triangles on the unit square."""
    if n < 1:
        raise MeshError("n must be >= 1")
    return rectangle_mesh(n, n)


def interval_mesh(n, length=1.0):
    """Uniform mesh of [0, length]; labels left=1, right=2."""
    if n < 1:
        raise MeshError("n must be >= 1")
    if length <= 0:
        raise MeshError("length must be positive")
    x = np.linspace(0.0, length, n + 1)
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(1, x[:, None], cells, [[0], [n]], [LEFT, RIGHT])


def _refine_interval(m):
    nv = m.n_vertices
    nc = m.n_cells
    mid = nv + np.arange(nc)
    x = m.vertices[:, 0]
    xm = 0.5 * (x[m.cells[:, 0]] + x[m.cells[:, 1]])
    verts = np.concatenate([x, xm])[:, None]
    cells = np.concatenate([
        np.column_stack([m.cells[:, 0], mid]),
        np.column_stack([mid, m.cells[:, 1]]),
    ])
    fine = Mesh(1, verts, cells, m.facets, m.facet_labels)

    parent = np.empty(nv + nc, np.int64)
    bary = np.zeros((nv + nc, 2))
    cell_ids = np.arange(nc)
    for k in (1, 0):
        parent[m.cells[:, k]] = cell_ids
    for k in (0, 1):
        hit = parent[m.cells[:, k]] == cell_ids
        bary[m.cells[hit, k]] = np.eye(2)[k]
    parent[mid] = np.arange(nc)
    bary[mid] = 0.5
    return NestedMeshPair(m, fine, parent, bary)


def _refine_triangles(m):
    nv = m.n_vertices
    c = m.cells
    local_edges = ((0, 1), (1, 2), (2, 0))
    e = np.concatenate([np.sort(c[:, list(p)], axis=1) for p in local_edges])
    edges, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.reshape(3, -1)
    m01, m12, m20 = (nv + inv[k] for k in range(3))
    verts = np.concatenate(
        [m.vertices, 0.5 * (m.vertices[edges[:, 0]] + m.vertices[edges[:, 1]])]
    )
    a, b, cc = c[:, 0], c[:, 1], c[:, 2]
    cells = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, cc]),
        np.column_stack([m01, m12, m20]),
    ])

    fs = np.sort(m.facets, axis=1)
    key = {tuple(ed): k for k, ed in enumerate(edges.tolist())}
    fm = np.array([nv + key[tuple(f)] for f in fs.tolist()], np.int64)
    facets = np.concatenate([
        np.column_stack([m.facets[:, 0], fm]),
        np.column_stack([fm, m.facets[:, 1]]),
    ])
    labels = np.concatenate([m.facet_labels, m.facet_labels])
    fine = Mesh(2, verts, cells, facets, labels)

    nf = len(verts)
    parent = np.empty(nf, np.int64)
    bary = np.zeros((nf, 3))
    cell_ids = np.arange(m.n_cells)
    for k in (2, 1, 0):
        parent[c[:, k]] = cell_ids
    for k in range(3):
        hit = parent[c[:, k]] == cell_ids
        bary[c[hit, k]] = np.eye(3)[k]
    for (p, q), mids in zip(local_edges, (m01, m12, m20)):
        parent[mids] = cell_ids
        w = np.zeros((m.n_cells, 3))
        w[:, p] = 0.5
        w[:, q] = 0.5
        bary[mids] = w
    return NestedMeshPair(m, fine, parent, bary)


def refine_uniform(coarse):
    """Split every cell at its edge midpoints.

    Coarse vertices keep their indices; midpoints follow in sorted-edge
    order, so the numbering is deterministic.
    """
    if coarse.dim == 1:
        return _refine_interval(coarse)
    return _refine_triangles(coarse)


def write_mesh(mesh, path):
    lines = [f"{mesh.dim} {mesh.n_vertices} {mesh.n_cells} {len(mesh.facets)}"]
    lines += [" ".join(repr(float(x)) for x in v) for v in mesh.vertices]
    lines += [" ".join(str(i + 1) for i in c) for c in mesh.cells]
    lines += [
        " ".join(str(i + 1) for i in f) + f" {lab}"
        for f, lab in zip(mesh.facets, mesh.facet_labels)
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path):
    """Read the plain-text mesh format written by :func:`write_mesh`.

    Line 1 holds ``dim nv nc nb``, followed by nv coordinate lines, nc cell
    lines (1-based vertex indices) and nb facet lines (1-based indices then
    an integer label).  ``#`` starts a comment.
    """
    records = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].split()
        if text:
            records.append((lineno, text))
    if not records:
        raise MeshFormatError("empty mesh file", 1)

    lineno, head = records[0]
    try:
        dim, nv, nc, nb = (int(t) for t in head)
    except ValueError:
        raise MeshFormatError("malformed header, expected 'dim nv nc nb'", lineno)
    if dim not in (1, 2) or min(nv, nc, nb) < 0:
        raise MeshFormatError("malformed header", lineno)
    if len(records) - 1 != nv + nc + nb:
        raise MeshFormatError(
            f"expected {nv + nc + nb} records after header, found {len(records) - 1}",
            records[-1][0],
        )

    def ints(rec, count, what):
        ln, toks = rec
        if len(toks) != count:
            raise MeshFormatError(f"{what}: expected {count} values", ln)
        try:
            return [int(t) for t in toks]
        except ValueError:
            raise MeshFormatError(f"{what}: non-integer value", ln)

    verts = []
    for ln, toks in records[1:1 + nv]:
        if len(toks) != dim:
            raise MeshFormatError(f"vertex: expected {dim} coordinates", ln)
        try:
            verts.append([float(t) for t in toks])
        except ValueError:
            raise MeshFormatError("vertex: bad coordinate", ln)
    verts = np.array(verts, float).reshape(-1, dim)

    cells = []
    for rec in records[1 + nv:1 + nv + nc]:
        idx = ints(rec, dim + 1, "cell")
        if min(idx) < 1 or max(idx) > nv:
            raise MeshFormatError(f"cell: index out of range (nv={nv})", rec[0])
        cells.append([i - 1 for i in idx])
    cells = np.array(cells, np.int64).reshape(-1, dim + 1)
    for k, rec in enumerate(records[1 + nv:1 + nv + nc]):
        x = verts[cells[k]]
        if dim == 1:
            meas = x[1, 0] - x[0, 0]
        else:
            d1, d2 = x[1] - x[0], x[2] - x[0]
            meas = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
        if meas == 0.0:
            raise MeshFormatError("degenerate cell", rec[0])
        if meas < 0.0:
            raise MeshFormatError("cell orientation must be counter-clockwise", rec[0])

    facets, labels = [], []
    for rec in records[1 + nv + nc:]:
        vals = ints(rec, dim + 1, "facet")
        idx, lab = vals[:-1], vals[-1]
        if min(idx) < 1 or max(idx) > nv:
            raise MeshFormatError(f"facet: index out of range (nv={nv})", rec[0])
        facets.append([i - 1 for i in idx])
        labels.append(lab)
    return Mesh(dim, verts, cells, np.array(facets, np.int64).reshape(-1, dim), labels)

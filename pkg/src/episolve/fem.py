"""P1 finite-element machinery shared by the model and the verification code.

Element contributions are scattered into a fixed CSR pattern through a
precomputed index map, so re-assembling a matrix with new coefficients is a
single ``np.bincount``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = ["QuadratureRule", "P1Space", "quadrature"]


class QuadratureRule:
    """Points in barycentric coordinates and weights summing to one."""

    def __init__(self, bary, weights):
        self.bary = np.asarray(bary, float)
        self.weights = np.asarray(weights, float)


def _gauss_1d(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    t = 0.5 * (x + 1.0)
    return QuadratureRule(np.column_stack([1.0 - t, t]), 0.5 * w)


_A5 = (6.0 - np.sqrt(15.0)) / 21.0
_B5 = (6.0 + np.sqrt(15.0)) / 21.0
_W5A = (155.0 - np.sqrt(15.0)) / 1200.0
_W5B = (155.0 + np.sqrt(15.0)) / 1200.0

_RULES = {
    # mid-edge rule, exact for quadratics
    (2, "midedge"): QuadratureRule(
        [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]], [1 / 3, 1 / 3, 1 / 3]
    ),
    # 7-point degree-5 rule
    (2, "deg5"): QuadratureRule(
        [
            [1 / 3, 1 / 3, 1 / 3],
            [_A5, _A5, 1 - 2 * _A5],
            [_A5, 1 - 2 * _A5, _A5],
            [1 - 2 * _A5, _A5, _A5],
            [_B5, _B5, 1 - 2 * _B5],
            [_B5, 1 - 2 * _B5, _B5],
            [1 - 2 * _B5, _B5, _B5],
        ],
        [9 / 40, _W5A, _W5A, _W5A, _W5B, _W5B, _W5B],
    ),
    (1, "midedge"): _gauss_1d(3),
    (1, "deg5"): _gauss_1d(5),
}


def quadrature(dim, name="midedge"):
    return _RULES[(dim, name)]


class P1Space:
    """Continuous piecewise-linear functions on a :class:`~episolve.mesh.Mesh`."""

    def __init__(self, mesh, rule="midedge"):
        self.mesh = mesh
        self.dim = mesh.dim
        self.n = mesh.n_vertices
        cells = mesh.cells
        self.cells = cells
        self.measure = mesh.cell_measures()
        self.rule = quadrature(self.dim, rule)
        self.grads = self._gradients()

        k = self.dim + 1
        rows = np.repeat(cells, k, axis=1).ravel()
        cols = np.tile(cells, (1, k)).ravel()
        pattern = sp.csr_matrix(
            (np.arange(1, rows.size + 1, dtype=float), (rows, cols)), shape=(self.n, self.n)
        )
        pattern.sum_duplicates()
        pattern.sort_indices()
        self.indptr = pattern.indptr
        self.indices = pattern.indices
        self.nnz = pattern.nnz
        # position of every (row, col) pair of every element in the CSR data
        row_start = self.indptr[rows]
        row_len = self.indptr[rows + 1] - row_start
        pos = np.empty(rows.size, np.int64)
        for r in np.unique(row_len):
            sel = row_len == r
            seg = self.indices[row_start[sel, None] + np.arange(r)]
            pos[sel] = row_start[sel] + np.argmax(seg == cols[sel, None], axis=1)
        self._scatter = pos
        self._diag = self._diag_positions()

        self._mass = None
        self._mass_csr = None
        self._gg = None
        self._qp = {}
        self._bb = None

    def _gradients(self):
        x = self.mesh.vertices[self.cells]
        if self.dim == 1:
            h = x[:, 1, 0] - x[:, 0, 0]
            g = np.stack([-1.0 / h, 1.0 / h], axis=1)
            return g[:, :, None]
        # gradients of barycentric coordinates
        x0, x1, x2 = x[:, 0], x[:, 1], x[:, 2]
        twice = 2.0 * self.measure
        g = np.empty((len(x), 3, 2))
        g[:, 0, 0] = (x1[:, 1] - x2[:, 1]) / twice
        g[:, 0, 1] = (x2[:, 0] - x1[:, 0]) / twice
        g[:, 1, 0] = (x2[:, 1] - x0[:, 1]) / twice
        g[:, 1, 1] = (x0[:, 0] - x2[:, 0]) / twice
        g[:, 2, 0] = (x0[:, 1] - x1[:, 1]) / twice
        g[:, 2, 1] = (x1[:, 0] - x0[:, 0]) / twice
        return g

    def _diag_positions(self):
        row_of = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return np.flatnonzero(self.indices == row_of)

    # -- evaluation helpers ------------------------------------------------

    def quad_points(self, rule=None):
        """Physical coordinates of quadrature points, shape (nc, nq, dim)."""
        q = self.rule if rule is None else rule
        key = id(q)
        if key not in self._qp:
            x = self.mesh.vertices[self.cells]
            self._qp[key] = np.einsum("qk,ckd->cqd", q.bary, x)
        return self._qp[key]

    def at_quad(self, u, rule=None):
        """Values of nodal field ``u`` at quadrature points, shape (nc, nq)."""
        q = self.rule if rule is None else rule
        return u[self.cells] @ q.bary.T

    def weights(self, rule=None):
        q = self.rule if rule is None else rule
        key = ("w", id(q))
        if key not in self._qp:
            self._qp[key] = self.measure[:, None] * q.weights[None, :]
        return self._qp[key]

    # -- assembly ----------------------------------------------------------

    def csr(self, data):
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def data_from_elements(self, elem):
        return np.bincount(self._scatter, weights=elem.ravel(), minlength=self.nnz)

    def mass_data(self, coef_q=None):
        """CSR data of the matrix (c phi_j, phi_k), c given at quadrature points."""
        if coef_q is None:
            if self._mass is None:
                self._mass = self.mass_data(np.ones((len(self.cells), len(self.rule.weights))))
            return self._mass
        q = self.rule
        if self._bb is None:
            self._bb = np.einsum("qj,qk->qjk", q.bary, q.bary).reshape(len(q.weights), -1)
        elem = (coef_q * self.weights()) @ self._bb
        return self.data_from_elements(elem)

    def stiffness_data(self, coef_q=None):
        """CSR data of the matrix (c grad phi_j, grad phi_k)."""
        if coef_q is None:
            cint = self.measure
        else:
            cint = np.sum(coef_q * self.weights(), axis=1)
        if self._gg is None:
            self._gg = np.einsum("cjd,ckd->cjk", self.grads, self.grads)
        return self.data_from_elements(cint[:, None, None] * self._gg)

    def mass(self):
        if self._mass_csr is None:
            self._mass_csr = self.csr(self.mass_data())
        return self._mass_csr

    def stiffness(self):
        return self.csr(self.stiffness_data())

    def load(self, f_q, rule=None):
        """Vector of (f, phi_j) with f given at quadrature points of ``rule``."""
        q = self.rule if rule is None else rule
        vals = (f_q * self.weights(q)) @ q.bary
        return np.bincount(self.cells.ravel(), weights=vals.ravel(), minlength=self.n)

    def integrate(self, u):
        """Exact integral of the P1 interpolant of nodal values ``u``."""
        return float(np.sum(self.measure * u[self.cells].mean(axis=1)))

    def apply_dirichlet(self, A, b, nodes, values):
        """Replace the rows of ``nodes`` by identity rows, in place."""
        if len(nodes) == 0:
            return A, b
        for i in nodes:
            A.data[self.indptr[i]:self.indptr[i + 1]] = 0.0
        A.data[self._diag[nodes]] = 1.0
        b[nodes] = values
        return A, b

    # -- boundary terms ----------------------------------------------------

    def facet_load(self, facet_ids, g, weight=None):
        """Boundary integrals of ``g(x) * w(x) * phi_j`` over selected facets.

        ``g`` maps points (m, dim) to values (m,); ``weight`` is an optional
        nodal field interpolated linearly along each facet.  In 1D a facet
        is a point and the integral is a point evaluation.
        """
        mesh = self.mesh
        f = mesh.facets[facet_ids]
        out = np.zeros(self.n)
        if len(f) == 0:
            return out
        if self.dim == 1:
            vals = g(mesh.vertices[f[:, 0]])
            if weight is not None:
                vals = vals * weight[f[:, 0]]
            np.add.at(out, f[:, 0], vals)
            return out
        x0 = mesh.vertices[f[:, 0]]
        x1 = mesh.vertices[f[:, 1]]
        length = np.linalg.norm(x1 - x0, axis=1)
        gp, gw = np.polynomial.legendre.leggauss(3)
        for tq, wq in zip(0.5 * (gp + 1.0), 0.5 * gw):
            xq = (1.0 - tq) * x0 + tq * x1
            val = g(xq) * length * wq
            if weight is not None:
                val = val * ((1.0 - tq) * weight[f[:, 0]] + tq * weight[f[:, 1]])
            np.add.at(out, f[:, 0], val * (1.0 - tq))
            np.add.at(out, f[:, 1], val * tq)
        return out

    def l2_error(self, u_h, exact, rule="deg5"):
        """Continuous L2 norms ``(||exact - u_h||, ||exact||)``.

        ``exact`` maps points of shape (..., dim) to values.
        """
        q = quadrature(self.dim, rule)
        pts = self.quad_points(q)
        ue = exact(pts)
        uh = self.at_quad(u_h, q)
        w = self.weights(q)
        return float(np.sqrt(np.sum(w * (ue - uh) ** 2))), float(np.sqrt(np.sum(w * ue**2)))

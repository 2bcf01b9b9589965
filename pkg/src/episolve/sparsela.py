"""Sparse linear algebra: CSR helpers, sparse LU, (F)GMRES, Jacobi.

CSR storage and LU factorization are delegated to scipy.  The Krylov
solvers are written out here because their stopping rules and residual
bookkeeping are part of the contract: right preconditioning, convergence
when ``||r|| < max(rtol*||b||, atol)``, divergence when
``||r|| > dtol*||b||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg.lapack import dgbtrf as gbtrf, dgbtrs as gbtrs

__all__ = [
    "CsrMatrix",
    "SingularMatrixError",
    "KrylovConfig",
    "KrylovReport",
    "as_csr",
    "spmv",
    "LUFactor",
    "lu_solve",
    "bandwidth",
    "gmres",
    "fgmres",
    "jacobi_smooth",
    "check_stop",
]

CsrMatrix = sp.csr_matrix


class SingularMatrixError(ArithmeticError):
    pass


def as_csr(A):
    A = sp.csr_matrix(A, dtype=float)
    if not A.has_sorted_indices:
        A.sort_indices()
    return A


def spmv(A, x):
    x = np.asarray(x, float)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {x.shape}")
    return A @ x


def bandwidth(A):
    """Largest |i - j| over the stored entries of ``A``."""
    A = sp.coo_matrix(A)
    if A.nnz == 0:
        return 0
    return int(np.max(np.abs(A.row.astype(np.int64) - A.col)))


class LUFactor:
    """Reusable sparse LU factorization with partial pivoting.

    Narrow-band matrices (1D meshes) go to LAPACK's banded LU, everything
    else to SuperLU.
    """

    BAND_LIMIT = 4

    def __init__(self, A):
        if A.shape[0] != A.shape[1]:
            raise ValueError("LU needs a square matrix")
        n = A.shape[0]
        self.shape = A.shape
        self._lu = self._band = None
        if n == 0:
            return
        coo = sp.coo_matrix(A, dtype=float)
        off = coo.row.astype(np.int64) - coo.col
        k = int(np.max(np.abs(off))) if coo.nnz else 0
        if k <= self.BAND_LIMIT and n > 4 * k:
            # LAPACK band storage: entry (i, j) lives at ab[2k + i - j, j]
            ab = np.zeros((3 * k + 1, n))
            np.add.at(ab, (2 * k + off, coo.col), coo.data)
            lu, piv, info = gbtrf(ab, k, k)
            if info > 0:
                raise SingularMatrixError(f"zero pivot in column {info - 1}")
            self._check_pivots(lu[2 * k], coo.data, n)
            self._band = (lu, piv, k)
            return
        try:
            self._lu = spla.splu(coo.tocsc(), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SingularMatrixError(str(exc)) from None
        self._check_pivots(self._lu.U.diagonal(), coo.data, n)

    @staticmethod
    def _check_pivots(pivots, data, n):
        # a pivot at roundoff level means the rows were dependent
        scale = float(np.max(np.abs(data))) if data.size else 0.0
        small = np.abs(pivots) <= n * np.finfo(float).eps * scale
        if np.any(small):
            raise SingularMatrixError(f"zero pivot in column {int(np.argmax(small))}")

    def solve(self, b):
        b = np.asarray(b, float)
        if self._band is not None:
            lu, piv, k = self._band
            x, info = gbtrs(lu, k, k, b, piv)
            return x
        if self._lu is None:
            return np.zeros_like(b)
        return self._lu.solve(b)

    __call__ = solve


def lu_solve(A, b):
    return LUFactor(A).solve(b)


@dataclass
class KrylovConfig:
    rtol: float = 1e-5
    atol: float = 1e-50
    dtol: float = 1e5
    max_outer: int = 200
    max_inner: int = 100
    restart: int | None = None

    def __post_init__(self):
        if min(self.rtol, self.atol, self.dtol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")

    def inner(self):
        """Config for an inner (coarse) solve: same tolerances, inner cap."""
        return KrylovConfig(self.rtol, self.atol, self.dtol, self.max_inner, self.max_inner, self.restart)


@dataclass
class KrylovReport:
    iterations: int = 0
    final_residual_norm: float = 0.0
    converged: bool = False
    diverged: bool = False
    residual_history: list = field(default_factory=list)
    # last Arnoldi estimate, before the true residual replaced it
    estimated_residual_norm: float = float("nan")


def check_stop(rnorm, bnorm, cfg):
    """Return 'converged', 'diverged' or None for one residual norm."""
    if rnorm < max(cfg.rtol * bnorm, cfg.atol):
        return "converged"
    if rnorm > cfg.dtol * bnorm:
        return "diverged"
    return None


def _matvec(A):
    if callable(A) and not hasattr(A, "shape"):
        return A
    return lambda v: A @ v


def _krylov(A, b, M, cfg, x0, flexible):
    cfg = cfg or KrylovConfig()
    b = np.asarray(b, float)
    n = b.shape[0]
    matvec = _matvec(A)
    precond = M if M is not None else (lambda v: v)
    x = np.zeros(n) if x0 is None else np.array(x0, float)

    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), KrylovReport(0, 0.0, True, False, [0.0], 0.0)
    r = b - matvec(x) if x0 is not None else b.copy()
    beta = float(np.linalg.norm(r))
    report = KrylovReport(residual_history=[beta])
    if check_stop(beta, bnorm, cfg) == "converged":
        report.converged = True
        report.final_residual_norm = report.estimated_residual_norm = beta
        return x, report

    m = cfg.restart or cfg.max_outer
    total = 0
    while True:
        size = min(m, cfg.max_outer - total)
        # only rows written below are ever read, so skip zero-filling
        V = np.empty((size + 1, n))
        Z = np.empty((size, n)) if flexible else None
        H = np.zeros((size + 1, size))
        cs = np.zeros(size)
        sn = np.zeros(size)
        g = np.zeros(size + 1)
        g[0] = beta
        V[0] = r / beta
        j = 0
        state = None
        while j < size:
            z = precond(V[j])
            if flexible:
                Z[j] = z
            w = matvec(z)
            # classical Gram-Schmidt, twice
            h = V[:j + 1] @ w
            w -= h @ V[:j + 1]
            h2 = V[:j + 1] @ w
            w -= h2 @ V[:j + 1]
            H[:j + 1, j] = h + h2
            hnext = float(np.linalg.norm(w))
            H[j + 1, j] = hnext
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = math.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            j += 1
            total += 1
            rnorm = abs(g[j])
            report.residual_history.append(rnorm)
            state = check_stop(rnorm, bnorm, cfg)
            if state is not None or hnext == 0.0:
                break
            V[j] = w / hnext

        y = _back_substitute(H[:j, :j], g[:j])
        if flexible:
            x = x + y @ Z[:j]
        else:
            x = x + precond(y @ V[:j])
        if state is not None or total >= cfg.max_outer or hnext == 0.0:
            break
        r = b - matvec(x)
        beta = float(np.linalg.norm(r))
        report.residual_history[-1] = beta

    true_r = float(np.linalg.norm(b - matvec(x)))
    report.estimated_residual_norm = report.residual_history[-1]
    report.residual_history[-1] = true_r
    report.iterations = total
    report.final_residual_norm = true_r
    final = check_stop(true_r, bnorm, cfg)
    report.converged = state == "converged" or final == "converged"
    report.diverged = not report.converged and "diverged" in (state, final)
    return x, report


def _back_substitute(R, g):
    k = len(g)
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        if R[i, i] == 0.0:
            continue
        y[i] = (g[i] - R[i, i + 1:] @ y[i + 1:]) / R[i, i]
    return y


def gmres(A, b, M=None, cfg=None, x0=None):
    """Right-preconditioned GMRES.

    ``A`` is a matrix or a callable matvec; ``M`` a callable applying the
    preconditioner (identity if None) that must be a fixed linear map.
    Returns ``(x, KrylovReport)``; non-convergence is flagged, not raised.
    """
    return _krylov(A, b, M, cfg, x0, flexible=False)


def fgmres(A, b, M=None, cfg=None, x0=None):
    """Flexible GMRES: ``M`` may change from one application to the next."""
    return _krylov(A, b, M, cfg, x0, flexible=True)


def jacobi_smooth(A, b, x, sweeps=1, omega=2.0 / 3.0, diag=None):
    """Damped Jacobi: x <- x + omega * D^-1 (b - A x), ``sweeps`` times."""
    d = A.diagonal() if diag is None else diag
    if np.any(d == 0.0):
        raise ZeroDivisionError(f"zero diagonal entry at row {int(np.argmax(d == 0.0))}")
    x = np.array(x, float)
    dinv = omega / d
    for _ in range(sweeps):
        x += dinv * (b - A @ x)
    return x

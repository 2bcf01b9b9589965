"""Manufactured solutions for the SEIRD system and convergence studies.

Every compartment is ``B sin(phase) + offset`` with phase ``10x + 0.2t`` in
1D and ``10xy + 0.2t`` in 2D.  With ``w = B sin(phase)`` and
``g2 = |grad phase|^2`` (the phase is harmonic, so its Laplacian vanishes)

    d/dt u_c              = 0.2 B cos(phase)
    div(N nu_c grad u_c)  = nu_c B g2 (5 B cos^2(phase) - N sin(phase))

and the forcing is ``d/dt u_c - div(...) - reaction_c(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from episolve.fem import P1Space
from episolve.mesh import BOTTOM, LEFT, RIGHT, TOP, interval_mesh, unit_square_mesh
from episolve.seird import BoundaryData, ModelParameters, PicardConfig, StateFields, run_simulation
from episolve.seird.params import COMPARTMENTS

__all__ = [
    "ManufacturedSolution",
    "reaction",
    "convergence_orders",
    "ConvergenceResult",
    "mms_convergence_spatial_1d",
    "mms_convergence_temporal_1d",
    "mms_run_2d",
    "relative_l2_error",
]

OFFSETS = {"s": 500.0, "e": 300.0, "i": 200.0, "r": 100.0, "d": 80.0}


def reaction(comp, u, params, beta_I, beta_E):
    """Right-hand-side reaction term of compartment ``comp``.

    ``u`` maps compartment names to arrays; beta values are arrays of the
    same shape.
    """
    p = params
    N = u["s"] + u["e"] + u["i"] + u["r"] + u["d"]
    a = 1.0 - p.A / N
    inf_I = a * beta_I * u["s"] * u["i"]
    inf_E = a * beta_E * u["s"] * u["e"]
    if comp == "s":
        return p.alpha * N - inf_I - inf_E - p.mu * u["s"]
    if comp == "e":
        return inf_I + inf_E - (p.sigma + p.gamma_E + p.mu) * u["e"]
    if comp == "i":
        return p.sigma * u["e"] - (p.gamma_R + p.gamma_D + p.mu) * u["i"]
    if comp == "r":
        return p.gamma_E * u["e"] + p.gamma_R * u["i"] - p.mu * u["r"]
    if comp == "d":
        return p.gamma_D * u["i"]
    raise KeyError(comp)


@dataclass
class ManufacturedSolution:
    dim: int = 1
    params: ModelParameters = field(default_factory=ModelParameters.normalized_1d)
    B: float = 25.0
    offsets: dict = field(default_factory=lambda: dict(OFFSETS))

    def phase(self, x, t):
        if self.dim == 1:
            return 10.0 * x[..., 0] + 0.2 * t
        return 10.0 * x[..., 0] * x[..., 1] + 0.2 * t

    def grad_phase_sq(self, x):
        if self.dim == 1:
            return np.full(x.shape[:-1], 100.0)
        return 100.0 * (x[..., 0] ** 2 + x[..., 1] ** 2)

    def value(self, comp, x, t):
        return self.B * np.sin(self.phase(x, t)) + self.offsets[comp]

    def values(self, x, t):
        return {c: self.value(c, x, t) for c in COMPARTMENTS}

    def total(self, x, t):
        return 5.0 * self.B * np.sin(self.phase(x, t)) + sum(self.offsets.values())

    def state(self, mesh, t):
        return StateFields.from_dict(self.values(mesh.vertices, t))

    def forcing(self, comp, x, t):
        ph = self.phase(x, t)
        s, c = np.sin(ph), np.cos(ph)
        B = self.B
        N = 5.0 * B * s + sum(self.offsets.values())
        nu = self.params.diffusion(comp)
        div = nu * B * self.grad_phase_sq(x) * (5.0 * B * c * c - N * s)
        u = self.values(x, t)
        bI = self.params.beta("I", x, t)
        bE = self.params.beta("E", x, t)
        return 0.2 * B * c - div - reaction(comp, u, self.params, bI, bE)

    def normal_derivative(self, label, x, t):
        """d u / d n on a side of the unit square (or an end of [0, 1])."""
        c = self.B * np.cos(self.phase(x, t))
        if self.dim == 1:
            return {LEFT: -10.0 * c, RIGHT: 10.0 * c}[label]
        xx, yy = x[..., 0], x[..., 1]
        return {
            LEFT: -10.0 * yy * c,
            RIGHT: 10.0 * yy * c,
            TOP: 10.0 * xx * c,
            BOTTOM: -10.0 * xx * c,
        }[label]

    def dirichlet(self, labels):
        return BoundaryData(dirichlet={lab: (lambda comp, x, t: self.value(comp, x, t)) for lab in labels})

    def neumann(self, labels):
        def make(lab):
            return lambda comp, x, t: self.normal_derivative(lab, x, t)

        return BoundaryData(neumann={lab: make(lab) for lab in labels})


def relative_l2_error(space, state, mms, t, rule="deg5"):
    """Sum over compartments of ||u - u_h|| / ||u|| (continuous L2 norms)."""
    total = 0.0
    for comp in COMPARTMENTS:
        err, ref = space.l2_error(state[comp], lambda x, c=comp: mms.value(c, x, t), rule)
        total += err / ref
    return total


def convergence_orders(errors, ratios):
    """p_k = log(E_{k-1}/E_k) / log(r_k); None where undefined."""
    out = []
    for k in range(1, len(errors)):
        e0, e1, r = errors[k - 1], errors[k], ratios[k - 1]
        if e0 <= 0 or e1 <= 0 or r == 1:
            out.append(None)
        else:
            out.append(math.log(e0 / e1) / math.log(r))
    return out


@dataclass
class ConvergenceResult:
    sizes: list
    errors: list
    orders: list
    monotone: bool
    picard_converged: bool = True

    def rows(self):
        yield (self.sizes[0], self.errors[0], None)
        for k in range(1, len(self.sizes)):
            yield (self.sizes[k], self.errors[k], self.orders[k - 1])


def _direct_solver():
    from episolve.schwarz import LinearSolver

    return LinearSolver(None, pc="direct")


def _run_1d(n_cells, dt, t_eval, params, picard_tol):
    mms = ManufacturedSolution(1, params)
    mesh = interval_mesh(n_cells, 1.0)
    space = P1Space(mesh)
    steps = int(round(t_eval / dt))
    cfg = PicardConfig(dt=dt, tol=picard_tol, max_iters=50)
    snaps, report = run_simulation(
        space, params, mms.state(mesh, 0.0), steps, cfg, _direct_solver(),
        forcing=mms.forcing, boundary=mms.dirichlet([LEFT, RIGHT]),
    )
    return space, report, mms, snaps[-1]


def mms_convergence_spatial_1d(hs=(0.05, 0.02, 0.01), dt=1e-5, t_eval=0.002, params=None,
                               picard_tol=1e-10, callback=None):
    params = params or ModelParameters.normalized_1d()
    errors, ok = [], True
    for h in hs:
        n = int(round(1.0 / h))
        space, rep, mms, (t_end, final) = _run_1d(n, dt, t_eval, params, picard_tol)
        errors.append(relative_l2_error(space, final, mms, t_end))
        ok &= rep.all_converged
        if callback:
            callback(h, errors[-1])
    ratios = [hs[k] / hs[k + 1] for k in range(len(hs) - 1)]
    orders = convergence_orders(errors, ratios)
    mono = all(errors[k + 1] < errors[k] for k in range(len(errors) - 1))
    return ConvergenceResult(list(hs), errors, orders, mono, ok)


def mms_convergence_temporal_1d(dts=(0.1, 0.01, 0.005), h=2e-4, t_eval=5.0, params=None,
                                picard_tol=1e-10, callback=None):
    params = params or ModelParameters.normalized_1d()
    n = int(round(1.0 / h))
    errors, ok = [], True
    for dt in dts:
        space, rep, mms, (t_end, final) = _run_1d(n, dt, t_eval, params, picard_tol)
        errors.append(relative_l2_error(space, final, mms, t_end))
        ok &= rep.all_converged
        if callback:
            callback(dt, errors[-1])
    ratios = [dts[k] / dts[k + 1] for k in range(len(dts) - 1)]
    orders = convergence_orders(errors, ratios)
    mono = all(errors[k + 1] < errors[k] for k in range(len(errors) - 1))
    return ConvergenceResult(list(dts), errors, orders, mono, ok)


def mms_run_2d(n=115, dt=0.01, T=50.0, pc="ras1", subdomains=4, picard_tol=1e-10, params=None,
               record_every=1, cfg=None, threads=1):
    """Two-dimensional run with time-dependent Neumann data on all sides.

    Returns a list of ``(t, summed relative L2 error)``.
    """
    from episolve.schwarz import LinearSolver

    params = params or ModelParameters.square_domain(A=100.0)
    mms = ManufacturedSolution(2, params)
    mesh = unit_square_mesh(n)
    space = P1Space(mesh)
    solver = LinearSolver(mesh, pc=pc, subdomains=subdomains, cfg=cfg, threads=threads)
    trace = [(0.0, relative_l2_error(space, mms.state(mesh, 0.0), mms, 0.0))]
    steps = int(round(T / dt))

    def on_step(k, t, state, step):
        if k % record_every == 0 or k == steps:
            trace.append((t, relative_l2_error(space, state, mms, t)))

    _, report = run_simulation(
        space, params, mms.state(mesh, 0.0), steps, PicardConfig(dt=dt, tol=picard_tol),
        solver, forcing=mms.forcing, boundary=mms.neumann([LEFT, RIGHT, TOP, BOTTOM]),
        on_step=on_step,
    )
    return trace, report

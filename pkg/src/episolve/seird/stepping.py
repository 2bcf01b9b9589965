"""Backward-Euler time stepping with Picard iterations."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from episolve.seird.assembly import AlleeLog, assemble_compartment
from episolve.seird.params import COMPARTMENTS, StateFields

log = logging.getLogger(__name__)

__all__ = ["PicardConfig", "StepReport", "SolveReport", "picard_step", "run_simulation", "integrate_field"]


@dataclass
class PicardConfig:
    dt: float = 0.1
    tol: float = 1e-8
    max_iters: int = 50
    warm_start: bool = False

    def __post_init__(self):
        if self.tol <= 0 or self.dt <= 0:
            raise ValueError("tol and dt must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class StepReport:
    t: float
    picard_iterations: int = 0
    converged: bool = False
    picard_errors: list = field(default_factory=list)
    krylov: dict = field(default_factory=lambda: {c: 0 for c in COMPARTMENTS})
    krylov_unconverged: int = 0
    coarse_iterations: list = field(default_factory=list)
    coarse_unconverged: int = 0
    pc_setup_seconds: float = 0.0
    solve_seconds: float = 0.0
    total_population: float = float("nan")
    drift: float = float("nan")
    min_density: float = float("nan")
    allee_clamped: int = 0

    @property
    def krylov_sum(self):
        return sum(self.krylov.values())


@dataclass
class SolveReport:
    steps: list = field(default_factory=list)

    def append(self, step):
        self.steps.append(step)

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)

    @property
    def all_converged(self):
        return all(s.converged for s in self.steps)

    def mean(self, attr):
        vals = [getattr(s, attr) for s in self.steps]
        return float(np.mean(vals)) if vals else float("nan")


def integrate_field(field_, mesh_or_space):
    """Integral of a nodal P1 field over the mesh."""
    from episolve.fem import P1Space

    space = mesh_or_space if isinstance(mesh_or_space, P1Space) else P1Space(mesh_or_space)
    return space.integrate(np.asarray(field_, float))


def _once_per_step(forcing):
    # the source depends on (comp, points, t) only, all fixed during one step
    cache = {}

    def cached(comp, points, t):
        if comp not in cache:
            cache[comp] = forcing(comp, points, t)
        return cache[comp]

    return cached


def picard_step(space, params, state, t, cfg, solver, forcing=None, boundary=None):
    """Advance ``state`` from ``t - dt`` to ``t``.

    Each Picard iterate solves the compartments in order s, e, i, r, d,
    starting from the previous time level.  Krylov solves start from zero
    unless ``cfg.warm_start`` is set.  Iteration stops
    when ||u^{k+1} - u^k|| / ||u^n|| < tol over all stacked compartments.
    """
    rep = StepReport(t=t)
    allee = AlleeLog()
    if forcing is not None:
        forcing = _once_per_step(forcing)
    prev_iter = state.copy()
    ref = float(np.linalg.norm(state.stacked()))
    if ref == 0.0:
        ref = 1.0
    for k in range(cfg.max_iters):
        partial = {}
        for comp in COMPARTMENTS:
            A, b = assemble_compartment(
                comp, space, params, state, prev_iter, partial, t, cfg.dt,
                forcing=forcing, boundary=boundary, allee_log=allee,
            )
            x, info = solver.solve(A, b, x0=prev_iter[comp] if cfg.warm_start else None)
            partial[comp] = x
            rep.krylov[comp] += info.iterations
            rep.krylov_unconverged += 0 if info.converged else 1
            rep.coarse_iterations.extend(info.coarse_iterations)
            rep.coarse_unconverged += info.coarse_unconverged
            rep.pc_setup_seconds += info.setup_seconds
            rep.solve_seconds += info.solve_seconds
        new = StateFields.from_dict(partial)
        eps = float(np.linalg.norm(new.stacked() - prev_iter.stacked())) / ref
        rep.picard_errors.append(eps)
        rep.picard_iterations = k + 1
        prev_iter = new
        if eps < cfg.tol:
            rep.converged = True
            break
    if not rep.converged:
        log.warning("Picard iteration did not reach tol=%g at t=%g (last eps=%g)", cfg.tol, t, eps)
    rep.allee_clamped = allee.clamped_points
    return prev_iter, rep


def run_simulation(space, params, initial, n_steps, cfg, solver, t0=0.0, forcing=None,
                   boundary=None, snapshot_every=0, on_step=None, positivity_tol=1e-8):
    """Integrate ``n_steps`` backward-Euler steps of size ``cfg.dt``.

    Returns ``(snapshots, SolveReport)`` where ``snapshots`` is a list of
    ``(t, StateFields)`` taken at t0 and every ``snapshot_every`` steps
    (never if 0) plus the final state.
    """
    state = initial.copy()
    total0 = space.integrate(state.N)
    snaps = [(t0, state.copy())]
    report = SolveReport()
    t = t0
    for n in range(1, n_steps + 1):
        t = t0 + n * cfg.dt
        tic = time.perf_counter()
        state, step = picard_step(space, params, state, t, cfg, solver, forcing, boundary)
        if not state.is_finite():
            raise FloatingPointError(f"non-finite state at t={t}")
        step.total_population = space.integrate(state.N)
        step.drift = (step.total_population - total0) / total0 if total0 else 0.0
        step.min_density = min(float(state[c].min()) for c in COMPARTMENTS)
        Nmax = float(np.max(np.abs(state.N)))
        if step.min_density < -positivity_tol * Nmax:
            log.warning("negative density %.3g at t=%g", step.min_density, t)
        report.append(step)
        log.debug("step %d t=%g picard=%d krylov=%d (%.2fs)", n, t, step.picard_iterations,
                  step.krylov_sum, time.perf_counter() - tic)
        if snapshot_every and n % snapshot_every == 0:
            snaps.append((t, state.copy()))
        if on_step is not None:
            on_step(n, t, state, step)
    if snaps[-1][0] != t:
        snaps.append((t, state.copy()))
    return snaps, report

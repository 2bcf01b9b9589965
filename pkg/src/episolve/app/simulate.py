"""Run a scenario and write its outputs."""

from __future__ import annotations

import logging
from pathlib import Path

from episolve.fem import P1Space
from episolve.schwarz import LinearSolver
from episolve.seird import PicardConfig, run_simulation
from episolve.seird.params import COMPARTMENTS
from episolve.sparsela import KrylovConfig

from episolve.app.output import TimeseriesWriter, write_vtk

log = logging.getLogger(__name__)

__all__ = ["build_problem", "simulate"]


def build_problem(scenario):
    """Return ``(space, params, initial_state, solver, picard_cfg)``."""
    pair = scenario.mesh_pair()
    mesh = pair.fine
    space = P1Space(mesh)
    params = scenario.params()
    initial = scenario.initial_state(space)
    solver = LinearSolver(
        mesh,
        pc=scenario.pc,
        subdomains=min(scenario.subdomains, mesh.n_vertices),
        overlap=scenario.overlap,
        cfg=KrylovConfig(rtol=scenario.rtol),
        coarse_pair=pair,
        amg_options=scenario.amg_options(),
        threads=scenario.threads,
    )
    cfg = PicardConfig(dt=scenario.dt, tol=scenario.picard_tol, max_iters=scenario.picard_max_iters)
    return space, params, initial, solver, cfg


def _fields(state):
    out = {c: state[c] for c in COMPARTMENTS}
    out["N"] = state.N
    return out


def simulate(scenario, out_dir, write_fields=True):
    """Integrate the scenario, writing ``timeseries.csv`` and VTK snapshots.

    Snapshots are written at step 0, every ``output_every`` steps and at the
    final step.  Returns the SolveReport.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    space, params, initial, solver, cfg = build_problem(scenario)
    mesh = space.mesh
    every = scenario.output_every
    if write_fields:
        write_vtk(out / "fields_0.vtk", mesh, _fields(initial))
    with TimeseriesWriter(out / "timeseries.csv", space) as ts:
        ts.initial(0.0, initial)

        def on_step(k, t, state, step):
            ts.step(t, state, step)
            log.info("step %d t=%g picard=%d krylov=%d", k, t, step.picard_iterations, step.krylov_sum)
            if write_fields and ((every and k % every == 0) or k == scenario.steps):
                write_vtk(out / f"fields_{k}.vtk", mesh, _fields(state))

        _, report = run_simulation(space, params, initial, scenario.steps, cfg, solver, on_step=on_step)
    return report

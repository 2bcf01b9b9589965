"""CSV and legacy-VTK writers."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from episolve.seird.params import COMPARTMENTS

__all__ = [
    "TIMESERIES_COLUMNS",
    "BENCH_COLUMNS",
    "TimeseriesWriter",
    "write_csv",
    "read_csv",
    "write_vtk",
]

TIMESERIES_COLUMNS = (
    "t", "S_int", "E_int", "I_int", "R_int", "D_int",
    "picard_iters", "krylov_sum", "setup_s", "solve_s",
)

BENCH_COLUMNS = (
    "mode", "pc", "threads", "subdomains", "dofs", "avg_picard", "avg_krylov",
    "setup_s", "solve_s", "failed",
)


class TimeseriesWriter:
    """Streams one row per time step to ``timeseries.csv``."""

    def __init__(self, path, space):
        self.path = Path(path)
        self.space = space
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(TIMESERIES_COLUMNS)

    def initial(self, t, state):
        self._row(t, state, 0, 0, 0.0, 0.0)

    def step(self, t, state, report):
        self._row(t, state, report.picard_iterations, report.krylov_sum,
                  report.pc_setup_seconds, report.solve_seconds)

    def _row(self, t, state, picard, krylov, setup, solve):
        ints = [self.space.integrate(state[c]) for c in COMPARTMENTS]
        self._w.writerow([repr(float(t))] + [repr(float(v)) for v in ints]
                         + [int(picard), int(krylov), f"{setup:.6g}", f"{solve:.6g}"])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(c, "") for c in columns]
            w.writerow(row)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_vtk(path, mesh, fields_, title="episolve"):
    """Legacy ASCII unstructured grid with nodal point data."""
    pts = mesh.vertices
    if mesh.dim == 1:
        pts = np.column_stack([pts, np.zeros((len(pts), 2))])
        cell_type = 3  # VTK_LINE
    else:
        pts = np.column_stack([pts, np.zeros(len(pts))])
        cell_type = 5  # VTK_TRIANGLE
    k = mesh.cells.shape[1]
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(pts)} double",
    ]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in pts]
    lines.append(f"CELLS {mesh.n_cells} {mesh.n_cells * (k + 1)}")
    lines += [f"{k} " + " ".join(map(str, c)) for c in mesh.cells]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += [str(cell_type)] * mesh.n_cells
    lines.append(f"POINT_DATA {len(pts)}")
    for name, values in fields_.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [f"{v:.17g}" for v in np.asarray(values, float)]
    Path(path).write_text("\n".join(lines) + "\n")

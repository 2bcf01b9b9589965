"""Scalability benchmark: iteration counts and timings per configuration."""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass, field, replace

from episolve.app.output import BENCH_COLUMNS, write_csv
from episolve.seird import run_simulation

log = logging.getLogger(__name__)

__all__ = ["BenchPlan", "BenchRow", "bench_run", "write_bench"]


@dataclass
class BenchPlan:
    """What to sweep.

    In ``strong`` mode the mesh is fixed and every thread count runs the
    same problem.  In ``weak`` mode ``mesh_sizes[k]`` is paired with
    ``threads[k]``.
    """

    mode: str = "strong"
    threads: list = field(default_factory=lambda: [1])
    mesh_sizes: list = field(default_factory=list)
    subdomains: list = field(default_factory=list)
    pcs: list = field(default_factory=list)
    steps: int = 10
    repetitions: int = 1

    def __post_init__(self):
        if self.mode not in ("strong", "weak"):
            raise ValueError(f"mode must be 'strong' or 'weak', got {self.mode!r}")
        if not self.threads:
            raise ValueError("threads list is empty")
        if self.mode == "weak" and len(self.mesh_sizes) != len(self.threads):
            raise ValueError("weak mode needs one mesh size per thread count")
        if self.steps < 1 or self.repetitions < 1:
            raise ValueError("steps and repetitions must be >= 1")

    def configurations(self, scenario):
        pcs = self.pcs or [scenario.pc]
        subs = self.subdomains or [scenario.subdomains]
        if self.mode == "strong":
            sizes = [self.mesh_sizes[0] if self.mesh_sizes else scenario.mesh_n] * len(self.threads)
        else:
            sizes = list(self.mesh_sizes)
        for pc in pcs:
            for nsub in subs:
                for threads, n in zip(self.threads, sizes):
                    yield replace(scenario, pc=pc, subdomains=nsub, threads=threads, mesh_n=n,
                                  steps=self.steps)


@dataclass
class BenchRow:
    mode: str
    pc: str
    threads: int
    subdomains: int
    dofs: int
    avg_picard: float = float("nan")
    avg_krylov: float = float("nan")
    setup_s: float = float("nan")
    solve_s: float = float("nan")
    failed: bool = False
    krylov_per_step: list = field(default_factory=list)
    coarse_iterations: list = field(default_factory=list)
    error: str = ""

    def as_dict(self):
        return {
            "mode": self.mode, "pc": self.pc, "threads": self.threads, "subdomains": self.subdomains,
            "dofs": self.dofs, "avg_picard": f"{self.avg_picard:.6g}", "avg_krylov": f"{self.avg_krylov:.6g}",
            "setup_s": f"{self.setup_s:.6g}", "solve_s": f"{self.solve_s:.6g}", "failed": int(self.failed),
        }


def _one(scenario):
    from episolve.app.simulate import build_problem

    space, params, initial, solver, cfg = build_problem(scenario)
    _, rep = run_simulation(space, params, initial, scenario.steps, cfg, solver)
    return space.n, rep


def bench_run(plan, scenario):
    """Run every configuration ``plan.repetitions`` times, sequentially.

    Times are medians over repetitions; iteration counts come from the
    first repetition (they do not depend on the thread count).  A failed
    configuration becomes a row with ``failed`` set.
    """
    rows = []
    for sc in plan.configurations(scenario):
        n_vertices = (sc.mesh_n + 1) ** 2 if sc.mesh_kind == "square" else 0
        row = BenchRow(plan.mode, sc.pc, sc.threads, sc.subdomains, 5 * n_vertices)
        setups, solves = [], []
        try:
            for r in range(plan.repetitions):
                n, rep = _one(sc)
                row.dofs = 5 * n
                setups.append(sum(s.pc_setup_seconds for s in rep.steps))
                solves.append(sum(s.solve_seconds for s in rep.steps))
                if r == 0:
                    row.avg_picard = rep.mean("picard_iterations")
                    row.avg_krylov = rep.mean("krylov_sum")
                    row.krylov_per_step = [s.krylov_sum for s in rep.steps]
                    row.coarse_iterations = [c for s in rep.steps for c in s.coarse_iterations]
                    row.failed = not rep.all_converged or any(s.krylov_unconverged for s in rep.steps)
        except (ArithmeticError, ValueError) as exc:
            log.error("configuration %s/%d threads failed: %s", sc.pc, sc.threads, exc)
            row.failed = True
            row.error = str(exc)
        if setups:
            row.setup_s = statistics.median(setups)
            row.solve_s = statistics.median(solves)
        rows.append(row)
        log.info("bench %s threads=%d subdomains=%d: picard %.2f krylov %.1f solve %.3fs",
                 row.pc, row.threads, row.subdomains, row.avg_picard, row.avg_krylov, row.solve_s)
    return rows


def write_bench(path, rows):
    write_csv(path, BENCH_COLUMNS, [r.as_dict() for r in rows])

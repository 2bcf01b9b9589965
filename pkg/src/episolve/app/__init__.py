"""Scenario configuration, simulation driver, outputs and the CLI."""

from episolve.app.bench import BenchPlan, BenchRow, bench_run, write_bench
from episolve.app.output import TIMESERIES_COLUMNS, TimeseriesWriter, read_csv, write_csv, write_vtk
from episolve.app.scenario import (
    PRESETS,
    ConfigError,
    RegionalBeta,
    Scenario,
    beta_field,
    gaussian_ic,
    load_config,
    multi_gaussian_ic,
    parse_config,
)
from episolve.app.simulate import build_problem, simulate

__all__ = [
    "BenchPlan",
    "BenchRow",
    "ConfigError",
    "PRESETS",
    "RegionalBeta",
    "Scenario",
    "TIMESERIES_COLUMNS",
    "TimeseriesWriter",
    "beta_field",
    "bench_run",
    "build_problem",
    "gaussian_ic",
    "load_config",
    "multi_gaussian_ic",
    "parse_config",
    "read_csv",
    "simulate",
    "write_bench",
    "write_csv",
    "write_vtk",
]

"""Manufactured-solution convergence studies and the ODE-limit oracle."""

from episolve.verify.cases import CASES, CaseResult, Check, run_case
from episolve.verify.mms import (
    ManufacturedSolution,
    convergence_orders,
    mms_convergence_spatial_1d,
    mms_convergence_temporal_1d,
    mms_run_2d,
    relative_l2_error,
)
from episolve.verify.ode import OdeState, ode_solve, pde_ode_compare

__all__ = [
    "CASES",
    "CaseResult",
    "Check",
    "ManufacturedSolution",
    "OdeState",
    "convergence_orders",
    "mms_convergence_spatial_1d",
    "mms_convergence_temporal_1d",
    "mms_run_2d",
    "ode_solve",
    "pde_ode_compare",
    "relative_l2_error",
    "run_case",
]

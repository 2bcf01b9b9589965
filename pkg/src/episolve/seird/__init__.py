"""The SEIRD reaction-diffusion model: parameters, assembly and time stepping."""

from episolve.seird.assembly import BoundaryData, NonPositiveDensityError, allee_factor, assemble_compartment
from episolve.seird.params import COMPARTMENTS, ModelParameters, StateFields
from episolve.seird.stepping import (
    PicardConfig,
    SolveReport,
    StepReport,
    integrate_field,
    picard_step,
    run_simulation,
)

__all__ = [
    "BoundaryData",
    "COMPARTMENTS",
    "ModelParameters",
    "NonPositiveDensityError",
    "PicardConfig",
    "SolveReport",
    "StateFields",
    "StepReport",
    "allee_factor",
    "assemble_compartment",
    "integrate_field",
    "picard_step",
    "run_simulation",
]

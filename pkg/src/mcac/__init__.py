"""Mass-conserving Allen-Cahn solver with bound-preserving ETD stepping."""

from .diagnostics import (
    Record,
    RunReport,
    bubble_radius,
    energy_increases,
    mass_drift,
    mbp_monitor,
    record,
)
from .field import CELL, VERTEX, Field, GridSpec, energy, error_norms, mass, sup_norm
from .harness import (
    Bubble,
    ConvergenceTable,
    CosProduct,
    InitialCondition,
    QuasiRandom,
    converge_space,
    converge_time,
    make_ic,
    rates,
    splitmix64_uniform,
)
from .model import ModelParams, lambda_multiplier, nonlinear_term, potential_terms
from .spectral import (
    LaplacianSymbol,
    OperatorContext,
    apply_phi,
    build_symbol,
    dense_oracle_phi,
    phi_array,
    phi_scalar,
)
from .stepper import (
    Scheme,
    StepParams,
    ch_etdrk2_step,
    etd1_step,
    etdrk2_step,
    imex1_step,
    run,
    step_once,
)

__version__ = "0.1.0"

__all__ = [
    "Bubble",
    "CELL",
    "ConvergenceTable",
    "CosProduct",
    "Field",
    "GridSpec",
    "InitialCondition",
    "LaplacianSymbol",
    "ModelParams",
    "OperatorContext",
    "QuasiRandom",
    "Record",
    "RunReport",
    "Scheme",
    "StepParams",
    "VERTEX",
    "apply_phi",
    "bubble_radius",
    "build_symbol",
    "ch_etdrk2_step",
    "converge_space",
    "converge_time",
    "dense_oracle_phi",
    "energy",
    "energy_increases",
    "error_norms",
    "etd1_step",
    "etdrk2_step",
    "imex1_step",
    "lambda_multiplier",
    "make_ic",
    "mass",
    "mass_drift",
    "mbp_monitor",
    "nonlinear_term",
    "phi_array",
    "phi_scalar",
    "potential_terms",
    "rates",
    "record",
    "run",
    "splitmix64_uniform",
    "step_once",
    "sup_norm",
]

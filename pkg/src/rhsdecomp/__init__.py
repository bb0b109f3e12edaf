"""Right-hand-side (resource share) decomposition with exact non-smooth penalties."""

from .errors import (
    DimensionError,
    InvalidPenaltyBound,
    InvalidProblem,
    MaxPivotsExceeded,
    OracleDisagreementWarning,
    ProblemFormatError,
)
from .problem import (
    BlockPoint,
    DecomposableLP,
    PenaltyBound,
    ShareAllocation,
    full_objective,
    joint_violation,
    load_problem,
    project_direction_onto_U0,
    project_onto_U,
    save_problem,
)
from .lp import LPInstance, LPSolution, solve_full_reference, solve_lp
from .penalty import (
    CalibrationResult,
    MasterEvaluation,
    calibrate_penalty,
    eval_master,
    eval_mu_block,
    optimal_allocation,
    penalized_minimum,
    recover_primal,
    subgradient_norm_bound,
)
from .nsopt import RunTrace, SolverConfig, StepSchedule, run_dasg, run_subgradient, step
from .testbed import SHOR, GeneratorSpec, generate_declp, initial_allocation, shor_eval

__version__ = "0.1.0"

"""Group-sparse l_{p,q}-l_r recovery by iterative support shrinking."""
from .admm import AdmmReport, AdmmState, admm_setup, admm_solve, admm_step
from .bench import ExperimentPlan, ResultRow, relative_error, run_experiment
from .datagen import GenSpec, gen_matrix, gen_noise, gen_problem, gen_signal
from .issapl import IterateState, RunRecord, SolverConfig, initialize, outer_step, solve
from .model import (
    INF,
    GroupedVector,
    GroupPartition,
    ProblemSpec,
    SupportSet,
    fidelity,
    group_norm,
    group_support,
    objective,
    restrict_columns,
)
from .subdiff import inexactness_certificate, stationarity_residual

__all__ = [
    "INF", "GroupPartition", "GroupedVector", "ProblemSpec", "SupportSet",
    "group_norm", "group_support", "fidelity", "objective", "restrict_columns",
    "AdmmState", "AdmmReport", "admm_setup", "admm_step", "admm_solve",
    "SolverConfig", "IterateState", "RunRecord", "initialize", "outer_step", "solve",
    "GenSpec", "gen_signal", "gen_matrix", "gen_noise", "gen_problem",
    "ExperimentPlan", "ResultRow", "relative_error", "run_experiment",
    "inexactness_certificate", "stationarity_residual",
]

"""Monte-Carlo benchmark harness and its command line interface."""
from .config import ExperimentConfig, default_conformation, load_conformation, save_conformation
from .harness import (
    FAMILIES,
    ConvergenceResult,
    RmseRecord,
    RuntimeSummary,
    draw_truth,
    rmse,
    run_convergence,
    run_runtime,
    run_sweep,
    run_trial,
    trial_rng,
)
from .io import read_sweep_csv, write_convergence_csv, write_manifest, write_runtime_csv, write_sweep_csv

__all__ = [
    "ExperimentConfig",
    "default_conformation",
    "load_conformation",
    "save_conformation",
    "FAMILIES",
    "ConvergenceResult",
    "RmseRecord",
    "RuntimeSummary",
    "draw_truth",
    "rmse",
    "run_convergence",
    "run_runtime",
    "run_sweep",
    "run_trial",
    "trial_rng",
    "read_sweep_csv",
    "write_convergence_csv",
    "write_manifest",
    "write_runtime_csv",
    "write_sweep_csv",
]

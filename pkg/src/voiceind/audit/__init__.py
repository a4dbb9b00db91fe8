"""Privacy audits, attack simulation, utility loss, and experiment drivers."""

from .attack import AttackResult, mse, nearest_records, reidentification_attack
from .bench import BenchRow, bench_perturbation, format_bench_table, scaling_ratios
from .bounds import (
    DEFAULT_AUDIT_CAP,
    AuditReport,
    BayesReport,
    bayes_bound_check,
    likelihood_tables,
    posterior_log_odds_shift,
    verify_voice_ind,
)
from .experiment import ExperimentRow, run_experiment_grid, summarize, write_experiment_csv

__all__ = [
    "AttackResult",
    "AuditReport",
    "BayesReport",
    "BenchRow",
    "DEFAULT_AUDIT_CAP",
    "ExperimentRow",
    "bayes_bound_check",
    "bench_perturbation",
    "format_bench_table",
    "likelihood_tables",
    "mse",
    "nearest_records",
    "posterior_log_odds_shift",
    "reidentification_attack",
    "run_experiment_grid",
    "scaling_ratios",
    "summarize",
    "verify_voice_ind",
    "write_experiment_csv",
]

from .metrics import (
    Decomposition,
    ErrorSummary,
    GeneratorModel,
    abs_error_distribution,
    decompose_contributions,
    dissipative_estimate,
    rmse_per_joint,
)
from .reports import (
    gnuplot_script,
    ranking,
    write_boxplot_csv,
    write_decomposition_csv,
    write_dissipative_csv,
    write_rmse_csv,
    write_ranking,
)

__all__ = [
    "Decomposition",
    "ErrorSummary",
    "GeneratorModel",
    "abs_error_distribution",
    "decompose_contributions",
    "dissipative_estimate",
    "gnuplot_script",
    "ranking",
    "rmse_per_joint",
    "write_boxplot_csv",
    "write_decomposition_csv",
    "write_dissipative_csv",
    "write_ranking",
    "write_rmse_csv",
]

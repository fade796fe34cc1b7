"""Taylor's power law estimation for spatiotemporal abundance panels.

Log-log least-squares fit of variance = alpha * mean^beta across the time
axis of a sites-by-times panel, with sandwich-based asymptotic confidence
intervals (bias-corrected and uncorrected), conventional-regression
comparison intervals, seeded simulation experiments, and residual
independence diagnostics.
"""

from .asymptotics import (
    AsymptoticReport,
    PhiDerivatives,
    confidence_intervals,
    e_hat,
    gamma_hat,
    min_eigen_gamma,
    normalized_statistic,
    phi,
    phi_hessians,
    phi_jacobian,
    poisson_gamma_oracle,
    sigma_hat_t,
)
from .diagnostics import (
    CorrelationReport,
    ResidualPanel,
    residual_panel,
    spatial_independence_report,
    temporal_independence_report,
)
from .errors import (
    DegenerateDesignError,
    DomainError,
    SingularityError,
    TaylorLawError,
    ValidationError,
)
from .estimator import (
    DesignMatrices,
    TLFit,
    conventional_ci,
    design_matrices,
    fit_tl,
)
from .io import DatasetFile, load_csv, write_panel_csv
from .moments import (
    MomentSummary,
    Panel,
    column_moments,
    rescale_panel,
    transpose_axis,
)
from .numerics import Interval, SymMatrix2, fisher_ci, normal_quantile, sym2x2_inv_sqrt
from .report import ReportDocument, analyze_panel
from .simulation import (
    DgpSpec,
    McResult,
    QqSample,
    coverage_experiment,
    dgp_true_params,
    generate_panel,
    qq_experiment,
    rmse_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticReport",
    "CorrelationReport",
    "DatasetFile",
    "DegenerateDesignError",
    "DesignMatrices",
    "DgpSpec",
    "DomainError",
    "Interval",
    "McResult",
    "MomentSummary",
    "Panel",
    "PhiDerivatives",
    "QqSample",
    "ReportDocument",
    "ResidualPanel",
    "SingularityError",
    "SymMatrix2",
    "TLFit",
    "TaylorLawError",
    "ValidationError",
    "analyze_panel",
    "column_moments",
    "confidence_intervals",
    "conventional_ci",
    "coverage_experiment",
    "design_matrices",
    "dgp_true_params",
    "e_hat",
    "fisher_ci",
    "fit_tl",
    "gamma_hat",
    "generate_panel",
    "load_csv",
    "min_eigen_gamma",
    "normal_quantile",
    "normalized_statistic",
    "phi",
    "phi_hessians",
    "phi_jacobian",
    "poisson_gamma_oracle",
    "qq_experiment",
    "rescale_panel",
    "residual_panel",
    "rmse_experiment",
    "sigma_hat_t",
    "spatial_independence_report",
    "sym2x2_inv_sqrt",
    "temporal_independence_report",
    "transpose_axis",
    "write_panel_csv",
]

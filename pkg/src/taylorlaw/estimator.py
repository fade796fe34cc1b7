"""Log-log ordinary least squares fit of the power law.

The fitted pair is theta = (log alpha, beta) from the regression of log
sample variance on log sample mean across times.  Times with a zero
sample mean or variance keep their place in the sums with the logarithm
replaced by 0 (the default convention); a drop mode that removes them and
renormalises is offered for heavily zero-inflated data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .errors import DegenerateDesignError, DomainError
from .moments import MomentSummary, Panel, column_moment_arrays, rescale_panel
from .numerics import Interval, SymMatrix2

DEGENERATE_TIME_MODES = ("keep", "drop")

# Determinant floor for the design matrix; log-means must vary in time
# for the slope to be identified.
EPS_DESIGN = 1e-10


@dataclass(frozen=True)
class DesignMatrices:
    """Normal-equation averages of the log-log regression.

    ``T_used`` counts the times entering the 1/T averages; it differs from
    ``T_total`` only in drop mode, where degenerate times are removed and
    the averages renormalise over what remains.
    """

    D: SymMatrix2
    N: tuple[float, float]
    T_total: int
    zero_mean_count: int
    zero_var_count: int
    T_used: int = -1

    def __post_init__(self):
        if self.T_used < 0:
            object.__setattr__(self, "T_used", self.T_total)


@dataclass(frozen=True)
class TLFit:
    """Fitted power-law parameters with the design they came from."""

    theta1: float
    theta2: float
    alpha_hat: float
    design: DesignMatrices
    variance_mode: str
    degenerate_times: str = "keep"

    @property
    def beta_hat(self) -> float:
        return self.theta2


def _log_pairs(summaries: Sequence[MomentSummary]) -> tuple[np.ndarray, np.ndarray]:
    lmu = np.array([math.log(s.mu_hat) if s.mean_positive else 0.0 for s in summaries])
    lvar = np.array([math.log(s.var_hat) if s.var_positive else 0.0 for s in summaries])
    return lmu, lvar


def design_matrices(summaries: Sequence[MomentSummary]) -> DesignMatrices:
    """Averages D and N of the least-squares normal equations.

    Uses the zero convention: log mu and log sigma^2 are replaced by 0 at
    times where the sample mean or sample variance vanishes.
    """
    if len(summaries) < 2:
        raise DomainError("need at least 2 times to build the design")
    lmu, lvar = _log_pairs(summaries)
    d12 = float(lmu.mean())
    d22 = float(np.square(lmu).mean())
    n1 = float(lvar.mean())
    n2 = float((lmu * lvar).mean())
    return DesignMatrices(
        D=SymMatrix2(1.0, d12, d22),
        N=(n1, n2),
        T_total=len(summaries),
        zero_mean_count=sum(not s.mean_positive for s in summaries),
        zero_var_count=sum(not s.var_positive for s in summaries),
    )


def solve_design(design: DesignMatrices) -> tuple[float, float]:
    """theta = D^-1 N via the closed-form 2x2 inverse (D has unit a11)."""
    det = design.D.a22 - design.D.a12 * design.D.a12
    if det < EPS_DESIGN:
        raise DegenerateDesignError(det)
    n1, n2 = design.N
    theta1 = (design.D.a22 * n1 - design.D.a12 * n2) / det
    theta2 = (n2 - design.D.a12 * n1) / det
    return theta1, theta2


def _filter_degenerate(summaries: Sequence[MomentSummary]) -> list[MomentSummary]:
    return [s for s in summaries if s.mean_positive and s.var_positive]


def fit_tl(
    panel: Panel,
    variance_mode: str = "biased",
    rescale_mode: str = "none",
    degenerate_times: str = "keep",
) -> TLFit:
    """Fit theta = (log alpha, beta) from a panel's column moments."""
    if degenerate_times not in DEGENERATE_TIME_MODES:
        raise DomainError(f"degenerate_times must be one of {DEGENERATE_TIME_MODES}")
    panel = rescale_panel(panel, rescale_mode)
    mu, m2, var = column_moment_arrays(panel.values, variance_mode)
    summaries = [MomentSummary(float(mu[t]), float(m2[t]), float(var[t]))
                 for t in range(panel.n_times)]
    return fit_from_summaries(summaries, variance_mode, degenerate_times)


def fit_from_summaries(
    summaries: Sequence[MomentSummary],
    variance_mode: str = "biased",
    degenerate_times: str = "keep",
) -> TLFit:
    """Fit from precomputed column moments (shared by fit_tl and the CLI)."""
    used = summaries if degenerate_times == "keep" else _filter_degenerate(summaries)
    if len(used) < 2:
        raise DegenerateDesignError(0.0)
    design = design_matrices(used)
    if degenerate_times == "drop":
        # The averages ran over the filtered times; restore the panel-level
        # bookkeeping (total time count and degenerate-time counts).
        design = DesignMatrices(
            design.D, design.N, len(summaries),
            zero_mean_count=sum(not s.mean_positive for s in summaries),
            zero_var_count=sum(not s.var_positive for s in summaries),
            T_used=len(used),
        )
    theta1, theta2 = solve_design(design)
    alpha_hat = math.exp(theta1) if theta1 < 709.0 else math.inf
    if not (math.isfinite(theta1) and math.isfinite(theta2) and math.isfinite(alpha_hat)):
        # Near-singular designs can amplify extreme log-moments past the
        # double range; treat that as an unusable design.
        raise DegenerateDesignError(design.D.a22 - design.D.a12 ** 2)
    return TLFit(theta1, theta2, alpha_hat, design, variance_mode, degenerate_times)


def conventional_ci(
    summaries: Sequence[MomentSummary],
    fit: TLFit,
    alpha: float = 0.05,
) -> tuple[Interval, Interval, bool]:
    """Classical simple-linear-regression intervals for intercept and slope.

    Treats the (log mean, log variance) pairs as an ordinary regression
    sample: slope SE = s / sqrt(sum (x - xbar)^2) with s^2 = RSS/(T-2) and
    Student-t quantiles on T-2 degrees of freedom.  Returns the intercept
    interval, the slope interval, and a degeneracy flag that is set when
    the residual sum of squares vanishes (zero-width intervals).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    used = summaries if fit.degenerate_times == "keep" else _filter_degenerate(summaries)
    t_used = len(used)
    if t_used < 3:
        raise DomainError(f"conventional intervals need at least 3 points, got {t_used}")
    lmu, lvar = _log_pairs(used)
    resid = lvar - fit.theta1 - fit.theta2 * lmu
    rss = float(np.square(resid).sum())
    sxx = float(np.square(lmu - lmu.mean()).sum())
    if sxx <= 0.0:
        raise DegenerateDesignError(0.0)
    # Exactly-collinear points leave only rounding dust in the residuals;
    # treat RSS at the machine level of the response scale as zero.
    rss_floor = 1e-28 * max(1.0, float(np.square(lvar).sum()))
    degenerate = rss <= rss_floor
    s2 = rss / (t_used - 2)
    tq = float(_scipy_stats.t.ppf(1.0 - alpha / 2.0, t_used - 2))
    se_slope = math.sqrt(s2 / sxx)
    se_intercept = math.sqrt(s2 * (1.0 / t_used + lmu.mean() ** 2 / sxx))
    ci_intercept = Interval(fit.theta1 - tq * se_intercept, fit.theta1 + tq * se_intercept)
    ci_slope = Interval(fit.theta2 - tq * se_slope, fit.theta2 + tq * se_slope)
    return ci_intercept, ci_slope, degenerate

"""Data-generating processes and seeded Monte-Carlo experiments.

Four DGPs share the time-varying rate profiles lambda_t = exp(cos t) or
3 + cos t (t = 1..T in radians):

* ``poisson``              X ~ Poisson(lambda_t); variance = mean.
* ``chisq1``               X = N(0, lambda_t)^2; variance = 2 mean^2.
* ``poisson_mixture``      X ~ Poisson(lambda_t Z + zeta_t) with a log-normal-
                           type mixing variable Z; variance = v mean^2 with
                           v = Var(Z), and the fourth moment is infinite.
* ``zero_inflated_chisq1`` chisq1 thinned by an independent Bernoulli(p);
                           variance = ((3 - p)/p) mean^2.

Everything is driven by the counter-based stream in
:mod:`taylorlaw.kernels`: each panel cell owns a substream, and per-replicate
seeds are derived with ``derive(seed, cell_index, replicate)``, so results
are bit-reproducible and replicates can run in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .asymptotics import confidence_intervals, panel_sandwich, statistic_pair
from .errors import DomainError, TaylorLawError, ValidationError
from .estimator import fit_tl
from .kernels import stream
from .moments import Panel
from .numerics import normal_quantile

DGP_KINDS = ("poisson", "chisq1", "poisson_mixture", "zero_inflated_chisq1")
PROFILES = ("exp_cos", "three_plus_cos", "custom")

# Var(Z) for Z = sqrt(3/4) exp(N(0,1)^2 / 8): E Z = 1 and
# E Z^2 = (3/4) E exp(N^2/4) = (3/4) sqrt(2) by the chi-square MGF.
MIXING_VARIANCE = 0.75 * math.sqrt(2.0) - 1.0

_SQRT_3_4 = math.sqrt(0.75)


@dataclass(frozen=True)
class DgpSpec:
    """Simulation scenario: marginal family, rate profile, zero-inflation."""

    kind: str
    lambda_profile: str = "exp_cos"
    p: float | None = None
    custom_lambdas: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise DomainError(f"unknown DGP kind {self.kind!r}; choose from {DGP_KINDS}")
        if self.lambda_profile not in PROFILES:
            raise DomainError(
                f"unknown profile {self.lambda_profile!r}; choose from {PROFILES}")
        if self.kind == "zero_inflated_chisq1":
            if self.p is None or not 0.0 < self.p <= 1.0:
                raise DomainError("zero_inflated_chisq1 needs retention p in (0, 1]")
        elif self.p is not None:
            raise DomainError("p is only meaningful for zero_inflated_chisq1")
        if self.lambda_profile == "custom":
            if not self.custom_lambdas:
                raise DomainError("custom profile needs custom_lambdas")
            if any(v <= 0.0 for v in self.custom_lambdas):
                raise DomainError("custom profile rates must be strictly positive")
        elif self.custom_lambdas is not None:
            raise DomainError("custom_lambdas requires lambda_profile='custom'")


def lambda_values(dgp: DgpSpec, T: int) -> np.ndarray:
    """Rate profile lambda_1..lambda_T, with t taken in radians."""
    if dgp.lambda_profile == "custom":
        lams = np.asarray(dgp.custom_lambdas, dtype=np.float64)
        if lams.size != T:
            raise DomainError(f"custom profile has {lams.size} rates, panel needs {T}")
        return lams
    t = np.arange(1, T + 1, dtype=np.float64)
    if dgp.lambda_profile == "exp_cos":
        return np.exp(np.cos(t))
    return 3.0 + np.cos(t)


def dgp_true_params(dgp: DgpSpec) -> tuple[float, float]:
    """Population (alpha, beta) of the scenario's power law.

    For the zero-inflated family the mean-based coefficient is (3 - p)/p:
    Var X = (3p - p^2) lambda^2 and E X = p lambda, so Var X =
    ((3 - p)/p) (E X)^2.
    """
    if dgp.kind == "poisson":
        return 1.0, 1.0
    if dgp.kind == "chisq1":
        return 2.0, 2.0
    if dgp.kind == "poisson_mixture":
        return MIXING_VARIANCE, 2.0
    return (3.0 - dgp.p) / dgp.p, 2.0


def mixture_offsets(lams: np.ndarray) -> np.ndarray:
    """zeta_t making the Poisson mixture obey variance = v mean^2 exactly."""
    v = MIXING_VARIANCE
    return (1.0 + np.sqrt(1.0 + 4.0 * v * v * lams * lams)) / (2.0 * v) - lams


def generate_panel(dgp: DgpSpec, n: int, T: int, seed: int) -> Panel:
    """Draw an n x T panel, independent across cells, deterministic in seed."""
    if n < 2 or T < 2:
        raise DomainError(f"panel dimensions must be at least 2x2, got {n}x{T}")
    backend = kernels.active_backend()
    base = stream.derive(seed)
    cell_seeds = backend.bits(base, 0, n * T)  # flat index c = t*n + j
    lams = lambda_values(dgp, T)
    lam_flat = np.repeat(lams, n)
    if dgp.kind == "poisson":
        flat = backend.poisson_draws(cell_seeds, lam_flat, 0)
    elif dgp.kind == "chisq1":
        z = backend.normal_quantile_vec(backend.cell_uniform(cell_seeds, 0))
        flat = lam_flat * (z * z)
    elif dgp.kind == "poisson_mixture":
        z = backend.normal_quantile_vec(backend.cell_uniform(cell_seeds, 0))
        mix = _SQRT_3_4 * backend.vexp((z * z) / 8.0)
        rates = lam_flat * mix + np.repeat(mixture_offsets(lams), n)
        if not np.all(rates > 0.0):
            raise ValidationError("internal: mixture produced a non-positive rate")
        flat = backend.poisson_draws(cell_seeds, rates, 1)
    else:  # zero_inflated_chisq1
        keep = backend.cell_uniform(cell_seeds, 0) < dgp.p
        z = backend.normal_quantile_vec(backend.cell_uniform(cell_seeds, 1))
        flat = np.where(keep, lam_flat * (z * z), 0.0)
    values = np.ascontiguousarray(flat.reshape(T, n).T)
    return Panel(values)


@dataclass(frozen=True)
class CellResult:
    """One (n, T) cell of an RMSE grid.

    ``replicates`` is the requested count; the RMSE averages run over
    ``replicates - failures`` successful fits.
    """

    n: int
    T: int
    replicates: int
    rmse_beta: float
    rmse_theta1: float
    failures: int


@dataclass(frozen=True)
class McResult:
    """RMSE grid output of a seeded Monte-Carlo run."""

    grid: tuple[CellResult, ...]
    seed: int
    dgp: DgpSpec


def rmse_experiment(
    dgp: DgpSpec,
    grid: Sequence[tuple[int, int]],
    reps: int,
    seed: int,
) -> McResult:
    """RMSE of (log alpha, beta) estimates over a grid of panel sizes.

    Replicate r of cell c uses the derived seed ``derive(seed, c, r)``.
    Replicates whose fit degenerates are excluded and counted.
    """
    if reps < 1:
        raise DomainError("reps must be at least 1")
    alpha_true, beta_true = dgp_true_params(dgp)
    theta1_true = math.log(alpha_true)
    cells = []
    for ci, (n, T) in enumerate(grid):
        se_beta = 0.0
        se_theta1 = 0.0
        failures = 0
        for r in range(reps):
            panel = generate_panel(dgp, n, T, stream.derive(seed, ci, r))
            try:
                fit = fit_tl(panel)
            except TaylorLawError:
                failures += 1
                continue
            se_beta += (fit.theta2 - beta_true) ** 2
            se_theta1 += (fit.theta1 - theta1_true) ** 2
        used = reps - failures
        cells.append(CellResult(
            n=n, T=T, replicates=reps,
            rmse_beta=math.sqrt(se_beta / used) if used else math.nan,
            rmse_theta1=math.sqrt(se_theta1 / used) if used else math.nan,
            failures=failures,
        ))
    return McResult(tuple(cells), seed, dgp)


@dataclass(frozen=True)
class QqSample:
    """Per-replicate normalised statistics for quantile-quantile plots."""

    corrected: np.ndarray
    uncorrected: np.ndarray
    theoretical_quantiles: np.ndarray
    replicates: np.ndarray
    failures: int
    seed: int
    dgp: DgpSpec = field(repr=False, default=None)

    def __post_init__(self):
        if len(self.corrected) != len(self.uncorrected):
            raise ValidationError("corrected and uncorrected samples must align")


def qq_experiment(dgp: DgpSpec, n: int, T: int, reps: int, seed: int) -> QqSample:
    """Normalised statistics with and without bias correction, per replicate.

    Attaches standard-normal plotting quantiles at positions (i + 1/2)/m.
    Replicate r uses the derived seed ``derive(seed, r)``.
    """
    if reps < 2:
        raise DomainError("qq experiment needs reps >= 2")
    theta_true = _true_theta(dgp)
    raw, corr, kept = [], [], []
    failures = 0
    for r in range(reps):
        panel = generate_panel(dgp, n, T, stream.derive(seed, r))
        try:
            stat_nc, stat_c = statistic_pair(panel, theta_true)
        except TaylorLawError:
            failures += 1
            continue
        raw.append(stat_nc)
        corr.append(stat_c)
        kept.append(r)
    m = len(raw)
    if m == 0:
        raise DomainError("every replicate failed; no statistics to report")
    theo = np.array([normal_quantile((i + 0.5) / m) for i in range(m)])
    return QqSample(
        corrected=np.asarray(corr), uncorrected=np.asarray(raw),
        theoretical_quantiles=theo, replicates=np.asarray(kept, dtype=np.int64),
        failures=failures, seed=seed, dgp=dgp,
    )


def _true_theta(dgp: DgpSpec) -> tuple[float, float]:
    alpha_true, beta_true = dgp_true_params(dgp)
    return math.log(alpha_true), beta_true


@dataclass(frozen=True)
class CoverageResult:
    """Empirical confidence-interval coverage of the true parameters."""

    corrected_theta1: float
    corrected_beta: float
    uncorrected_theta1: float
    uncorrected_beta: float
    replicates_used: int
    failures: int
    alpha: float


def coverage_experiment(
    dgp: DgpSpec, n: int, T: int, reps: int, alpha: float, seed: int
) -> CoverageResult:
    """Fraction of replicates whose intervals contain the true parameters."""
    theta_true = _true_theta(dgp)
    hits = np.zeros(4, dtype=np.int64)
    failures = 0
    for r in range(reps):
        panel = generate_panel(dgp, n, T, stream.derive(seed, r))
        try:
            fit, gamma, e_vec, excl = panel_sandwich(panel)
            report = confidence_intervals(
                fit, gamma, e_vec, n, T, alpha, "on", excluded_times=excl)
        except TaylorLawError:
            failures += 1
            continue
        hits[0] += report.intervals_corrected[0].contains(theta_true[0])
        hits[1] += report.intervals_corrected[1].contains(theta_true[1])
        hits[2] += report.intervals_uncorrected[0].contains(theta_true[0])
        hits[3] += report.intervals_uncorrected[1].contains(theta_true[1])
    used = reps - failures
    if used == 0:
        raise DomainError("every replicate failed; no coverage to report")
    frac = hits / used
    return CoverageResult(frac[0], frac[1], frac[2], frac[3], used, failures, alpha)

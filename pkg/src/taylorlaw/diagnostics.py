"""Residual-based independence checks.

Standardising each panel column by its sample mean and standard deviation
yields residuals that behave like a stationary array when the power law
holds; per-site autocorrelations and pairwise spatial correlations of
those residuals, wrapped in Fisher-z intervals, quantify how compatible
the data are with independence across time and across sites.

The sampling error of the per-column mean and standard deviation is
neglected when building the intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .kernels import stream
from .moments import Panel, column_moment_arrays
from .numerics import fisher_ci

DEFAULT_MAX_PAIRS = 20000


@dataclass(frozen=True)
class ResidualPanel:
    """Column-standardised residuals with a validity mask over times."""

    values: np.ndarray
    valid_times: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.values.shape[0]

    @property
    def usable_values(self) -> np.ndarray:
        return self.values[:, self.valid_times]


@dataclass(frozen=True)
class CorrelationReport:
    """Coverage of zero by Fisher intervals over series or site pairs."""

    alpha: float
    per_lag_coverage: dict[int, float]
    spatial_coverage: float | None
    pairs_tested: int
    series_tested: int
    excluded_degenerate: int


def residual_panel(panel: Panel) -> ResidualPanel:
    """Standardise each column; columns with zero variance are masked out."""
    mu, _, var = column_moment_arrays(panel.values, "biased")
    valid = var > 0.0
    if not valid.any():
        raise ValidationError("every column is constant; no residuals to analyse")
    values = np.zeros_like(panel.values)
    sd = np.sqrt(var[valid])
    values[:, valid] = (panel.values[:, valid] - mu[valid]) / sd
    return ResidualPanel(values, valid)


def temporal_independence_report(
    res: ResidualPanel, max_lag: int = 3, alpha: float = 0.05
) -> CorrelationReport:
    """Per-lag share of sites whose autocorrelation interval contains 0.

    The lag-h autocorrelation of a site series z is
    sum_{t <= N-h} z_t z_{t+h} / sum_t z_t^2 over the valid times; the
    Fisher interval uses N = number of valid times.  Sites with a
    degenerate series (zero energy or |rho| >= 1) are excluded and counted,
    once per lag at which they degenerate.
    """
    if max_lag < 1:
        raise DomainError("max_lag must be at least 1")
    z = res.usable_values
    n_valid = z.shape[1]
    if n_valid < max_lag + 4:
        raise DomainError(
            f"need at least max_lag + 4 = {max_lag + 4} valid times, got {n_valid}")
    energy = np.square(z).sum(axis=1)
    excluded = 0
    per_lag: dict[int, float] = {}
    for h in range(1, max_lag + 1):
        num = (z[:, :-h] * z[:, h:]).sum(axis=1)
        contains = 0
        tested = 0
        for j in range(res.n_sites):
            if energy[j] <= 0.0:
                excluded += 1
                continue
            rho = num[j] / energy[j]
            if abs(rho) >= 1.0:
                excluded += 1
                continue
            tested += 1
            contains += fisher_ci(rho, n_valid, alpha).contains(0.0)
        per_lag[h] = 100.0 * contains / tested if tested else math.nan
    return CorrelationReport(
        alpha=alpha, per_lag_coverage=per_lag, spatial_coverage=None,
        pairs_tested=0, series_tested=res.n_sites, excluded_degenerate=excluded,
    )


def _pair_from_index(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map lexicographic pair index to (j, l) with j < l."""
    counts = np.arange(n - 1, 0, -1)
    starts = np.concatenate([[0], np.cumsum(counts)])
    j = np.searchsorted(starts, k, side="right") - 1
    l = k - starts[j] + j + 1
    return j, l


def _sample_pair_indices(total: int, max_pairs: int, seed: int) -> np.ndarray:
    """Deterministic uniform subsample of distinct pair indices."""
    s = stream.derive(seed, 2)
    if total <= 4 * max_pairs:
        # Partial Fisher-Yates over the full index range.
        idx = np.arange(total, dtype=np.int64)
        for i in range(max_pairs):
            u = stream.uniform(s, i)
            j = i + int(u * (total - i))
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:max_pairs]
    chosen: list[int] = []
    seen: set[int] = set()
    i = 0
    while len(chosen) < max_pairs:
        k = int(stream.uniform(s, i) * total)
        i += 1
        if k not in seen:
            seen.add(k)
            chosen.append(k)
    return np.asarray(chosen, dtype=np.int64)


def spatial_independence_report(
    res: ResidualPanel,
    alpha: float = 0.05,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    seed: int = 0,
) -> CorrelationReport:
    """Share of site pairs whose residual-correlation interval contains 0.

    All n(n-1)/2 pairs are tested when they fit within ``max_pairs``;
    otherwise a seed-deterministic uniform subsample of ``max_pairs`` pairs
    is used.  Pairs with a degenerate correlation (constant series or
    |r| >= 1, e.g. duplicated sites) are excluded and counted.
    """
    if max_pairs < 1:
        raise DomainError("max_pairs must be at least 1")
    z = res.usable_values
    n, n_valid = z.shape
    if n_valid < 4:
        raise DomainError(f"need at least 4 valid times, got {n_valid}")
    total = n * (n - 1) // 2
    if total <= max_pairs:
        pair_idx = np.arange(total, dtype=np.int64)
    else:
        pair_idx = _sample_pair_indices(total, max_pairs, seed)
    jj, ll = _pair_from_index(pair_idx, n)
    centred = z - z.mean(axis=1, keepdims=True)
    energy = np.square(centred).sum(axis=1)
    contains = 0
    tested = 0
    excluded = 0
    for j, l in zip(jj, ll):
        denom_sq = energy[j] * energy[l]
        dot = float(centred[j] @ centred[l])
        # Cauchy-Schwarz equality (proportional series, e.g. duplicated
        # sites) is detected on the squares, where it is exact in floats.
        if denom_sq <= 0.0 or dot * dot >= denom_sq:
            excluded += 1
            continue
        r = dot / math.sqrt(denom_sq)
        if abs(r) >= 1.0:
            excluded += 1
            continue
        tested += 1
        contains += fisher_ci(r, n_valid, alpha).contains(0.0)
    return CorrelationReport(
        alpha=alpha, per_lag_coverage={},
        spatial_coverage=100.0 * contains / tested if tested else math.nan,
        pairs_tested=tested, series_tested=n, excluded_degenerate=excluded,
    )

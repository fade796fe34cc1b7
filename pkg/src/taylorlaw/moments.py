"""Panel container and per-time sample moments.

A panel is a complete n x T rectangle of nonnegative abundances (sites by
times).  Moments are always taken down columns: the sample mean, the
sample mean of squares, and the sample variance at each time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError

VARIANCE_MODES = ("biased", "unbiased")
RESCALE_MODES = ("grand_mean", "none")

# Relative cancellation threshold below which the one-pass variance
# m2 - mu^2 is replaced by the two-pass centred sum; the log of the
# variance amplifies cancellation error otherwise.
_CANCEL_REL = 1e-12


@dataclass
class Panel:
    """Rectangular abundance panel: ``values[j, t]`` is site j at time t."""

    values: np.ndarray
    site_labels: list[str] | None = None
    time_labels: list[str] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValidationError(f"panel must be 2-dimensional, got shape {v.shape}")
        n, T = v.shape
        if n < 2 or T < 2:
            raise ValidationError(f"panel needs at least 2 sites and 2 times, got {n}x{T}")
        if not np.all(np.isfinite(v)):
            j, t = np.argwhere(~np.isfinite(v))[0]
            raise ValidationError(f"non-finite value at site {j}, time {t}")
        if np.any(v < 0):
            j, t = np.argwhere(v < 0)[0]
            raise ValidationError(f"negative value {v[j, t]} at site {j}, time {t}")
        if self.site_labels is not None and len(self.site_labels) != n:
            raise ValidationError("site_labels length does not match site count")
        if self.time_labels is not None and len(self.time_labels) != T:
            raise ValidationError("time_labels length does not match time count")
        self.values = v

    @property
    def n_sites(self) -> int:
        return self.values.shape[0]

    @property
    def n_times(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MomentSummary:
    """Sample moments of one panel column."""

    mu_hat: float
    m2_hat: float
    var_hat: float
    mean_positive: bool = field(init=False)
    var_positive: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "mean_positive", self.mu_hat > 0.0)
        object.__setattr__(self, "var_positive", self.var_hat > 0.0)


def column_moment_arrays(
    values: np.ndarray, variance_mode: str = "biased"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised (mu, m2, var) per column; the fast path behind column_moments."""
    if variance_mode not in VARIANCE_MODES:
        raise DomainError(f"variance_mode must be one of {VARIANCE_MODES}")
    n = values.shape[0]
    mu = values.mean(axis=0)
    m2 = np.square(values).mean(axis=0)
    if not np.all(np.isfinite(m2)):
        raise ValidationError(
            "squared values overflow; rescale the panel (grand_mean) first")
    var = m2 - mu * mu
    # Cancellation guard: recompute nearly-vanishing variances from the
    # centred sum, which cannot go negative.
    shaky = var < _CANCEL_REL * m2
    if shaky.any():
        centred = values[:, shaky] - mu[shaky]
        var[shaky] = np.square(centred).mean(axis=0)
    if variance_mode == "unbiased":
        var = var * (n / (n - 1.0))
    return mu, m2, var


def column_moments(panel: Panel, variance_mode: str = "biased") -> list[MomentSummary]:
    """Per-time sample moments of a panel, in time order."""
    mu, m2, var = column_moment_arrays(panel.values, variance_mode)
    return [MomentSummary(float(mu[t]), float(m2[t]), float(var[t]))
            for t in range(panel.n_times)]


def rescale_panel(panel: Panel, mode: str = "none") -> Panel:
    """Optionally divide every entry by the grand mean of all n x T entries.

    Zeros count as observations in the grand mean.  Raises on an all-zero
    panel in grand_mean mode.
    """
    if mode not in RESCALE_MODES:
        raise DomainError(f"rescale mode must be one of {RESCALE_MODES}")
    if mode == "none":
        return panel
    grand = float(panel.values.mean())
    if grand <= 0.0:
        raise DomainError("grand-mean rescaling requires a positive grand mean")
    return Panel(panel.values / grand, panel.site_labels, panel.time_labels)


def transpose_axis(panel: Panel) -> Panel:
    """Swap sites and times, so a fit of the result estimates the temporal law."""
    return Panel(panel.values.T.copy(), panel.time_labels, panel.site_labels)

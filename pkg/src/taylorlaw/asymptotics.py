"""Sandwich asymptotics for the log-log least-squares estimator.

Everything needed to normalise the estimation error and build confidence
intervals: the normal-equation deviation function phi with its Jacobian
and Hessians, the per-time covariance of (X, X^2), the averaged sandwich
matrix and its inverse square root, the second-order bias vector, the
interval machinery, and the closed-form Poisson oracle used to validate
the sandwich on simulated data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .estimator import TLFit, fit_from_summaries
from .moments import MomentSummary, Panel, column_moment_arrays
from .numerics import (
    Interval,
    SymMatrix2,
    min_eigenvalue,
    normal_quantile,
    sym2x2_inv_sqrt,
)

Vec2 = tuple[float, float]


@dataclass(frozen=True)
class PhiDerivatives:
    """phi, its Jacobian, and both Hessians at one point."""

    value: Vec2
    jacobian: tuple[Vec2, Vec2]
    hessian1: SymMatrix2
    hessian2: SymMatrix2


@dataclass(frozen=True)
class AsymptoticReport:
    """Sandwich quantities and the two confidence-interval pairs."""

    gamma_hat: SymMatrix2
    c_hat: SymMatrix2
    e_hat: Vec2
    h_n: SymMatrix2
    m_n: Vec2
    intervals_corrected: tuple[Interval, Interval]
    intervals_uncorrected: tuple[Interval, Interval]
    min_eigen_gamma: float
    regime: str
    n: int
    T: int
    alpha: float
    excluded_times: int = 0


def _check_domain(x: float, y: float):
    if not (x > 0.0 and y - x * x > 0.0):
        raise DomainError(
            f"phi requires x > 0 and y - x^2 > 0, got x={x}, y-x^2={y - x * x}")


def phi(theta: Vec2, x: float, y: float) -> Vec2:
    """Normal-equation deviations of the log-log regression at (x, y).

    x is a mean, y a mean of squares, so y - x^2 is the variance.
    """
    _check_domain(x, y)
    t1, t2 = theta
    lx = math.log(x)
    ls = math.log(y - x * x)
    return (ls - t1 - t2 * lx, lx * ls - t1 * lx - t2 * lx * lx)


def phi_jacobian(theta: Vec2, x: float, y: float) -> tuple[Vec2, Vec2]:
    """Rows are (d phi_l / dx, d phi_l / dy) for l = 1, 2."""
    _check_domain(x, y)
    t1, t2 = theta
    s = y - x * x
    lx = math.log(x)
    ls = math.log(s)
    j11 = -2.0 * x / s - t2 / x
    j12 = 1.0 / s
    j21 = ls / x - 2.0 * x * lx / s - t1 / x - 2.0 * t2 * lx / x
    j22 = lx / s
    return ((j11, j12), (j21, j22))


def phi_hessians(theta: Vec2, x: float, y: float) -> tuple[SymMatrix2, SymMatrix2]:
    """Hessians of both components of phi."""
    _check_domain(x, y)
    t1, t2 = theta
    s = y - x * x
    s2 = s * s
    x2 = x * x
    lx = math.log(x)
    ls = math.log(s)
    h1 = SymMatrix2(
        -2.0 / s - 4.0 * x2 / s2 + t2 / x2,
        2.0 * x / s2,
        -1.0 / s2,
    )
    h2 = SymMatrix2(
        -4.0 / s - ls / x2 - 2.0 * lx / s - 4.0 * x2 * lx / s2
        + (t1 - 2.0 * t2) / x2 + 2.0 * t2 * lx / x2,
        1.0 / (x * s) + 2.0 * x * lx / s2,
        -lx / s2,
    )
    return h1, h2


def phi_derivatives(theta: Vec2, x: float, y: float) -> PhiDerivatives:
    h1, h2 = phi_hessians(theta, x, y)
    return PhiDerivatives(phi(theta, x, y), phi_jacobian(theta, x, y), h1, h2)


def sigma_hat_t(column: Sequence[float]) -> SymMatrix2:
    """Sample covariance of Y = (X, X^2) over one panel column (biased)."""
    col = np.asarray(column, dtype=np.float64)
    if col.ndim != 1 or col.size < 2:
        raise DomainError("sigma_hat_t needs a 1-d column of length >= 2")
    m1 = float(col.mean())
    sq = np.square(col)
    m2 = float(sq.mean())
    m3 = float((sq * col).mean())
    m4 = float(np.square(sq).mean())
    return SymMatrix2(m2 - m1 * m1, m3 - m1 * m2, m4 - m2 * m2)


def sigma_hats_from_values(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-column (Sigma11, Sigma12, Sigma22) arrays for a whole panel."""
    sq = np.square(values)
    m1 = values.mean(axis=0)
    m2 = sq.mean(axis=0)
    m3 = (sq * values).mean(axis=0)
    m4 = np.square(sq).mean(axis=0)
    if not np.all(np.isfinite(m4)):
        raise DomainError(
            "fourth moments overflow; rescale the panel (grand_mean) first")
    return m2 - m1 * m1, m3 - m1 * m2, m4 - m2 * m2


def _jacobian_arrays(theta: Vec2, mu: np.ndarray, m2: np.ndarray):
    t1, t2 = theta
    s = m2 - mu * mu
    lx = np.log(mu)
    ls = np.log(s)
    j11 = -2.0 * mu / s - t2 / mu
    j12 = 1.0 / s
    j21 = ls / mu - 2.0 * mu * lx / s - t1 / mu - 2.0 * t2 * lx / mu
    j22 = lx / s
    return j11, j12, j21, j22


def _hessian_arrays(theta: Vec2, mu: np.ndarray, m2: np.ndarray):
    t1, t2 = theta
    s = m2 - mu * mu
    s2 = s * s
    x2 = mu * mu
    lx = np.log(mu)
    ls = np.log(s)
    h1xx = -2.0 / s - 4.0 * x2 / s2 + t2 / x2
    h1xy = 2.0 * mu / s2
    h1yy = -1.0 / s2
    h2xx = (-4.0 / s - ls / x2 - 2.0 * lx / s - 4.0 * x2 * lx / s2
            + (t1 - 2.0 * t2) / x2 + 2.0 * t2 * lx / x2)
    h2xy = 1.0 / (mu * s) + 2.0 * mu * lx / s2
    h2yy = -lx / s2
    return (h1xx, h1xy, h1yy), (h2xx, h2xy, h2yy)


def _usable_mask(mu: np.ndarray, m2: np.ndarray, var: np.ndarray) -> np.ndarray:
    # phi is evaluated at (mu, m2), so its literal domain m2 - mu^2 > 0
    # must hold as floats even when the guarded variance disagrees.
    return (mu > 0.0) & (var > 0.0) & (m2 - mu * mu > 0.0)


def _gamma_e_from_arrays(
    theta: Vec2,
    mu: np.ndarray,
    m2: np.ndarray,
    var: np.ndarray,
    s11: np.ndarray,
    s12: np.ndarray,
    s22: np.ndarray,
) -> tuple[SymMatrix2, Vec2, int]:
    """Averaged sandwich and bias vector over usable times."""
    usable = _usable_mask(mu, m2, var)
    count = int(usable.sum())
    if count == 0:
        raise DomainError("no usable times: every column has a zero mean or variance")
    mu, m2 = mu[usable], m2[usable]
    s11, s12, s22 = s11[usable], s12[usable], s22[usable]
    j11, j12, j21, j22 = _jacobian_arrays(theta, mu, m2)
    # J Sigma J' per time, averaged.
    r11 = j11 * s11 + j12 * s12
    r12 = j11 * s12 + j12 * s22
    g11 = float((r11 * j11 + r12 * j12).mean())
    g12 = float((r11 * j21 + r12 * j22).mean())
    g22 = float(((j21 * s11 + j22 * s12) * j21 + (j21 * s12 + j22 * s22) * j22).mean())
    (h1xx, h1xy, h1yy), (h2xx, h2xy, h2yy) = _hessian_arrays(theta, mu, m2)
    e1 = float((h1xx * s11 + 2.0 * h1xy * s12 + h1yy * s22).mean())
    e2 = float((h2xx * s11 + 2.0 * h2xy * s12 + h2yy * s22).mean())
    return SymMatrix2(g11, g12, g22), (e1, e2), count


def _arrays_from_inputs(
    summaries: Sequence[MomentSummary], sigma_hats: Sequence[SymMatrix2]
):
    if len(summaries) != len(sigma_hats):
        raise DomainError("summaries and sigma_hats must align one per time")
    mu = np.array([s.mu_hat for s in summaries])
    m2 = np.array([s.m2_hat for s in summaries])
    var = np.array([s.var_hat for s in summaries])
    s11 = np.array([m.a11 for m in sigma_hats])
    s12 = np.array([m.a12 for m in sigma_hats])
    s22 = np.array([m.a22 for m in sigma_hats])
    return mu, m2, var, s11, s12, s22


def gamma_hat(
    summaries: Sequence[MomentSummary],
    sigma_hats: Sequence[SymMatrix2],
    fit: TLFit,
) -> SymMatrix2:
    """Averaged sandwich covariance of the linearised normal equations.

    Times with a non-positive sample mean or variance are outside phi's
    domain; they are skipped and the average runs over the usable times.
    """
    arrays = _arrays_from_inputs(summaries, sigma_hats)
    gamma, _, _ = _gamma_e_from_arrays((fit.theta1, fit.theta2), *arrays)
    return gamma


def e_hat(
    summaries: Sequence[MomentSummary],
    sigma_hats: Sequence[SymMatrix2],
    fit: TLFit,
) -> Vec2:
    """Second-order (Hessian-trace) bias vector, averaged over usable times."""
    arrays = _arrays_from_inputs(summaries, sigma_hats)
    _, e_vec, _ = _gamma_e_from_arrays((fit.theta1, fit.theta2), *arrays)
    return e_vec


def min_eigen_gamma(gamma: SymMatrix2) -> float:
    """Smallest eigenvalue of the 2x2 sandwich matrix, closed form."""
    return min_eigenvalue(gamma)


def _d_inverse(fit: TLFit) -> tuple[float, float, float]:
    d = fit.design.D
    det = d.a22 - d.a12 * d.a12
    return d.a22 / det, -d.a12 / det, 1.0 / det  # (i11, i12, i22)


def confidence_intervals(
    fit: TLFit,
    gamma: SymMatrix2,
    e_vec: Vec2,
    n: int,
    T: int,
    alpha: float = 0.05,
    correction: str = "on",
    excluded_times: int = 0,
) -> AsymptoticReport:
    """Asymptotic confidence intervals for both components of theta.

    H_n = D^-1 Gamma D^-1 sets the width; the bias shift M_n =
    (1/2) sqrt(T/n) D^-1 E moves both endpoints left by M_n(i)/sqrt(nT)
    when the correction is on.  The 1/2 matches the second-order term of
    the Taylor expansion that creates the bias (without it the shift
    doubles the actual bias and empirical coverage collapses).  Corrected
    and uncorrected intervals are both reported; they have identical width
    by construction.
    """
    if correction not in ("on", "off"):
        raise DomainError("correction must be 'on' or 'off'")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    c_hat = sym2x2_inv_sqrt(gamma)  # raises SingularityError when not PD
    i11, i12, i22 = _d_inverse(fit)
    # H = D^-1 Gamma D^-1 with symmetric D^-1.
    b11 = i11 * gamma.a11 + i12 * gamma.a12
    b12 = i11 * gamma.a12 + i12 * gamma.a22
    b21 = i12 * gamma.a11 + i22 * gamma.a12
    b22 = i12 * gamma.a12 + i22 * gamma.a22
    h_n = SymMatrix2(
        b11 * i11 + b12 * i12,
        b11 * i12 + b12 * i22,
        b21 * i12 + b22 * i22,
    )
    scale = 0.5 * math.sqrt(T / n)
    m_full = (scale * (i11 * e_vec[0] + i12 * e_vec[1]),
              scale * (i12 * e_vec[0] + i22 * e_vec[1]))
    m_n = m_full if correction == "on" else (0.0, 0.0)
    q = normal_quantile(1.0 - alpha / 2.0)
    snt = math.sqrt(n * T)
    theta = (fit.theta1, fit.theta2)

    def intervals(shift: Vec2) -> tuple[Interval, Interval]:
        out = []
        for i in range(2):
            half = math.sqrt(h_n.a11 if i == 0 else h_n.a22) * q
            out.append(Interval(theta[i] - (half + shift[i]) / snt,
                                theta[i] + (half - shift[i]) / snt))
        return out[0], out[1]

    return AsymptoticReport(
        gamma_hat=gamma,
        c_hat=c_hat,
        e_hat=e_vec,
        h_n=h_n,
        m_n=m_n,
        intervals_corrected=intervals(m_full),
        intervals_uncorrected=intervals((0.0, 0.0)),
        min_eigen_gamma=min_eigen_gamma(gamma),
        regime="bounded_T_over_n" if correction == "on" else "small_T_over_n",
        n=n,
        T=T,
        alpha=alpha,
        excluded_times=excluded_times,
    )


def panel_sandwich(panel: Panel, variance_mode: str = "biased",
                   degenerate_times: str = "keep"):
    """Fit a panel and compute its sandwich quantities in one pass.

    Returns (fit, gamma, e_vec, excluded_times).  Shared by the normalised
    statistic, the coverage experiments, and the report pipeline.
    """
    mu, m2, var = column_moment_arrays(panel.values, variance_mode)
    summaries = [MomentSummary(float(mu[t]), float(m2[t]), float(var[t]))
                 for t in range(panel.n_times)]
    fit = fit_from_summaries(summaries, variance_mode, degenerate_times)
    s11, s12, s22 = sigma_hats_from_values(panel.values)
    gamma, e_vec, count = _gamma_e_from_arrays(
        (fit.theta1, fit.theta2), mu, m2, var, s11, s12, s22)
    return fit, gamma, e_vec, panel.n_times - count


def statistic_pair(
    panel: Panel,
    true_theta: Vec2,
    variance_mode: str = "biased",
) -> tuple[Vec2, Vec2]:
    """(uncorrected, corrected) normalised statistics from one panel fit."""
    fit, gamma, e_vec, _ = panel_sandwich(panel, variance_mode)
    c_hat = sym2x2_inv_sqrt(gamma)
    n, T = panel.n_sites, panel.n_times
    d = fit.design.D
    dt = (fit.theta1 - true_theta[0], fit.theta2 - true_theta[1])
    u = (d.a11 * dt[0] + d.a12 * dt[1], d.a12 * dt[0] + d.a22 * dt[1])
    snt = math.sqrt(n * T)
    raw = (snt * (c_hat.a11 * u[0] + c_hat.a12 * u[1]),
           snt * (c_hat.a12 * u[0] + c_hat.a22 * u[1]))
    half_scale = 0.5 * math.sqrt(T / n)
    corrected = (raw[0] - half_scale * (c_hat.a11 * e_vec[0] + c_hat.a12 * e_vec[1]),
                 raw[1] - half_scale * (c_hat.a12 * e_vec[0] + c_hat.a22 * e_vec[1]))
    return raw, corrected


def normalized_statistic(
    panel: Panel,
    true_theta: Vec2,
    corrected: bool = True,
    variance_mode: str = "biased",
) -> Vec2:
    """sqrt(nT) C D (theta_hat - theta), optionally bias-corrected.

    The corrected version subtracts (1/2) sqrt(T/n) C E, which recentres
    the statistic when the panel stays balanced (T comparable to n).
    """
    raw, with_correction = statistic_pair(panel, true_theta, variance_mode)
    return with_correction if corrected else raw


def poisson_y_covariance(mu: float) -> SymMatrix2:
    """Covariance of Y = (X, X^2) for Poisson X with mean mu, closed form."""
    if mu <= 0.0:
        raise DomainError(f"Poisson rate must be positive, got {mu}")
    return SymMatrix2(mu, 2.0 * mu * mu + mu, 4.0 * mu ** 3 + 6.0 * mu * mu + mu)


def poisson_y_covariance_det(mu: float) -> float:
    """det Var(Y) = 2 mu^3 for Poisson X."""
    if mu <= 0.0:
        raise DomainError(f"Poisson rate must be positive, got {mu}")
    return 2.0 * mu ** 3


def poisson_gamma_oracle(lambdas: Sequence[float], theta: Vec2) -> SymMatrix2:
    """Analytic sandwich matrix for independent Poisson columns.

    Evaluates the Jacobian at the population moments (mu, mu + mu^2) and
    plugs in the closed-form covariance of (X, X^2).
    """
    lams = np.asarray(lambdas, dtype=np.float64)
    if lams.size == 0 or np.any(lams <= 0.0):
        raise DomainError("all Poisson rates must be positive")
    mu = lams
    m2 = mu + mu * mu
    s11 = mu
    s12 = 2.0 * mu * mu + mu
    s22 = 4.0 * mu ** 3 + 6.0 * mu * mu + mu
    j11, j12, j21, j22 = _jacobian_arrays(theta, mu, m2)
    r11 = j11 * s11 + j12 * s12
    r12 = j11 * s12 + j12 * s22
    g11 = float((r11 * j11 + r12 * j12).mean())
    g12 = float((r11 * j21 + r12 * j22).mean())
    g22 = float(((j21 * s11 + j22 * s12) * j21 + (j21 * s12 + j22 * s22) * j22).mean())
    return SymMatrix2(g11, g12, g22)

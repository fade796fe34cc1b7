"""Fit-report assembly: one panel in, one self-describing document out.

The document carries the point estimates, the sandwich intervals with and
without bias correction, the conventional regression intervals for
comparison, and full provenance (input hash, flags, versions) so any
report can be reproduced exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernels
from .asymptotics import AsymptoticReport, confidence_intervals, panel_sandwich
from .estimator import TLFit, conventional_ci
from .moments import MomentSummary, Panel, column_moment_arrays, rescale_panel, transpose_axis
from .numerics import Interval

AXES = ("spatial", "temporal")


@dataclass(frozen=True)
class ReportDocument:
    """Everything a fit run produces, ready for serialisation."""

    fit: TLFit
    asymptotics: AsymptoticReport
    conventional_theta1: Interval
    conventional_beta: Interval
    conventional_degenerate: bool
    diagnostics: dict | None
    provenance: dict

    def to_dict(self) -> dict:
        fit = self.fit
        a = self.asymptotics

        def interval(iv: Interval) -> dict:
            return {"lower": iv.lower, "upper": iv.upper}

        def sym(m) -> dict:
            return {"a11": m.a11, "a12": m.a12, "a22": m.a22}

        return {
            "fit": {
                "theta1": fit.theta1,
                "beta": fit.theta2,
                "alpha_hat": fit.alpha_hat,
                "variance_mode": fit.variance_mode,
                "degenerate_times": fit.degenerate_times,
                "design": {
                    "d11": fit.design.D.a11,
                    "d12": fit.design.D.a12,
                    "d22": fit.design.D.a22,
                    "n1": fit.design.N[0],
                    "n2": fit.design.N[1],
                    "T_total": fit.design.T_total,
                    "T_used": fit.design.T_used,
                    "zero_mean_count": fit.design.zero_mean_count,
                    "zero_var_count": fit.design.zero_var_count,
                },
            },
            "asymptotics": {
                "n": a.n,
                "T": a.T,
                "alpha": a.alpha,
                "regime": a.regime,
                "excluded_times": a.excluded_times,
                "gamma_hat": sym(a.gamma_hat),
                "c_hat": sym(a.c_hat),
                "e_hat": list(a.e_hat),
                "h_n": sym(a.h_n),
                "m_n": list(a.m_n),
                "min_eigen_gamma": a.min_eigen_gamma,
                "intervals": {
                    "corrected": {
                        "theta1": interval(a.intervals_corrected[0]),
                        "beta": interval(a.intervals_corrected[1]),
                    },
                    "uncorrected": {
                        "theta1": interval(a.intervals_uncorrected[0]),
                        "beta": interval(a.intervals_uncorrected[1]),
                    },
                },
            },
            "conventional": {
                "theta1": interval(self.conventional_theta1),
                "beta": interval(self.conventional_beta),
                "zero_rss_degenerate": self.conventional_degenerate,
            },
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }


def analyze_panel(
    panel: Panel,
    axis: str = "spatial",
    variance_mode: str = "biased",
    rescale: str = "none",
    alpha: float = 0.05,
    correction: str = "on",
    degenerate_times: str = "keep",
    provenance: dict | None = None,
) -> ReportDocument:
    """Run the full fit pipeline on one panel.

    The temporal axis transposes the panel first, so its moments run over
    times at each site.  Rescaling divides by the grand mean.  Raises
    DegenerateDesignError or SingularityError when the panel cannot
    support the fit or the sandwich.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    if axis == "temporal":
        panel = transpose_axis(panel)
    panel = rescale_panel(panel, rescale)
    fit, gamma, e_vec, excluded = panel_sandwich(panel, variance_mode, degenerate_times)
    n, T = panel.n_sites, panel.n_times
    report = confidence_intervals(
        fit, gamma, e_vec, n, T, alpha, correction, excluded_times=excluded)
    mu, m2, var = column_moment_arrays(panel.values, variance_mode)
    summaries = [MomentSummary(float(mu[t]), float(m2[t]), float(var[t]))
                 for t in range(T)]
    conv_t1, conv_beta, conv_degen = conventional_ci(summaries, fit, alpha)
    prov = dict(provenance or {})
    prov.setdefault("package_version", _version())
    prov.setdefault("kernel_backend", kernels.active_backend().name)
    return ReportDocument(
        fit=fit,
        asymptotics=report,
        conventional_theta1=conv_t1,
        conventional_beta=conv_beta,
        conventional_degenerate=conv_degen,
        diagnostics=None,
        provenance=prov,
    )


def _version() -> str:
    from . import __version__

    return __version__


def flatten_for_csv(doc: dict, prefix: str = "") -> list[tuple[str, str]]:
    """Depth-first (key, value) rows of a nested document, dotted paths."""
    from .io import fmt

    rows: list[tuple[str, str]] = []
    for key, value in doc.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            rows.extend(flatten_for_csv(value, path))
        elif isinstance(value, (list, tuple)):
            for i, v in enumerate(value):
                if isinstance(v, dict):
                    rows.extend(flatten_for_csv(v, f"{path}[{i}]"))
                else:
                    rows.append((f"{path}[{i}]", fmt(v) if isinstance(v, float) else str(v)))
        elif isinstance(value, float):
            rows.append((path, fmt(value)))
        else:
            rows.append((path, str(value)))
    return rows

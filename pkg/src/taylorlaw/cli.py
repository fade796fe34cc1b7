"""Command-line surface: fit, simulate, qq, diagnose.

Exit codes
----------
0  success
2  usage error (argparse)
3  input parsing or validation failure
4  degenerate design (log-means do not vary enough)
5  sandwich matrix not positive definite

All outputs are deterministic given identical flags and seed: no
timestamps, stable key order, 17-significant-digit floats, atomic writes.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, kernels
from .diagnostics import (
    DEFAULT_MAX_PAIRS,
    residual_panel,
    spatial_independence_report,
    temporal_independence_report,
)
from .errors import DegenerateDesignError, DomainError, SingularityError, ValidationError
from .io import (
    DatasetFile,
    atomic_write_text,
    fmt,
    json_dumps,
    load_csv,
    sha256_of_file,
    write_csv_table,
)
from .report import analyze_panel, flatten_for_csv
from .simulation import DgpSpec, qq_experiment, rmse_experiment

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DEGENERATE_DESIGN = 4
EXIT_SINGULAR = 5


def _dataset_args(sub: argparse.ArgumentParser):
    sub.add_argument("--input", required=True, help="panel CSV path")
    sub.add_argument("--layout", choices=("wide", "long"), default="wide")
    sub.add_argument("--delimiter", default=",")
    sub.add_argument("--no-header", action="store_true",
                     help="input file has no header row")


def _dgp_args(sub: argparse.ArgumentParser):
    sub.add_argument("--dgp", required=True,
                     choices=("poisson", "chisq1", "poisson_mixture",
                              "zero_inflated_chisq1"))
    sub.add_argument("--profile", choices=("exp_cos", "three_plus_cos", "custom"),
                     default="exp_cos")
    sub.add_argument("--p", type=float, default=None,
                     help="zero-inflation retention probability")
    sub.add_argument("--lambdas", default=None,
                     help="comma-separated rates for --profile custom")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taylorlaw",
        description="Power-law (variance = alpha * mean^beta) estimation for "
                    "spatiotemporal abundance panels.")
    parser.add_argument("--version", action="version", version=f"taylorlaw {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="fit the power law and report intervals")
    _dataset_args(fit)
    fit.add_argument("--axis", choices=("spatial", "temporal"), default="spatial")
    fit.add_argument("--alpha", type=float, default=0.05)
    fit.add_argument("--variance", choices=("biased", "unbiased"), default="biased")
    fit.add_argument("--rescale", choices=("grand_mean", "none"), default="none")
    fit.add_argument("--bias-correction", choices=("on", "off"), default="on")
    fit.add_argument("--degenerate-times", choices=("keep", "drop"), default="keep")
    fit.add_argument("--format", choices=("json", "csv"), default="json")
    fit.add_argument("--out", default=None, help="output path (default: stdout)")

    sim = subs.add_parser("simulate", help="RMSE grid experiment")
    _dgp_args(sim)
    sim.add_argument("--grid", required=True,
                     help="comma-separated nxT cells, e.g. 25x50,50x50")
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True)

    qq = subs.add_parser("qq", help="normalised-statistic sample for QQ plots")
    _dgp_args(qq)
    qq.add_argument("--n", type=int, required=True)
    qq.add_argument("--t", type=int, required=True)
    qq.add_argument("--reps", type=int, required=True)
    qq.add_argument("--seed", type=int, required=True)
    qq.add_argument("--out", required=True)

    diag = subs.add_parser("diagnose", help="residual independence diagnostics")
    _dataset_args(diag)
    diag.add_argument("--lags", type=int, default=3)
    diag.add_argument("--alpha", type=float, default=0.05)
    diag.add_argument("--max-pairs", type=int, default=DEFAULT_MAX_PAIRS)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--out", default=None, help="output path (default: stdout)")

    return parser


def _load_panel(args):
    dataset = DatasetFile(args.input, args.layout, args.delimiter, not args.no_header)
    return load_csv(dataset)


def _dgp_from_args(args) -> DgpSpec:
    custom = None
    if args.lambdas is not None:
        custom = tuple(float(v) for v in args.lambdas.split(","))
    return DgpSpec(args.dgp, args.profile, p=args.p, custom_lambdas=custom)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        atomic_write_text(out, text if text.endswith("\n") else text + "\n")


def cmd_fit(args) -> int:
    panel = _load_panel(args)
    provenance = {
        "command": "fit",
        "input": args.input,
        "input_sha256": sha256_of_file(args.input),
        "flags": {
            "layout": args.layout,
            "axis": args.axis,
            "alpha": args.alpha,
            "variance": args.variance,
            "rescale": args.rescale,
            "bias_correction": args.bias_correction,
            "degenerate_times": args.degenerate_times,
            "format": args.format,
        },
    }
    doc = analyze_panel(
        panel,
        axis=args.axis,
        variance_mode=args.variance,
        rescale=args.rescale,
        alpha=args.alpha,
        correction=args.bias_correction,
        degenerate_times=args.degenerate_times,
        provenance=provenance,
    ).to_dict()
    if args.format == "json":
        _emit(json_dumps(doc, indent=2), args.out)
    else:
        rows = flatten_for_csv(doc)
        text = "key,value\n" + "\n".join(f"{k},{v}" for k, v in rows)
        _emit(text, args.out)
    return EXIT_OK


def _grid_from_arg(arg: str) -> list[tuple[int, int]]:
    cells = []
    for token in arg.split(","):
        try:
            n_str, t_str = token.lower().split("x")
            cells.append((int(n_str), int(t_str)))
        except ValueError:
            raise DomainError(f"bad grid cell {token!r}; expected like 50x25") from None
    return cells


def cmd_simulate(args) -> int:
    dgp = _dgp_from_args(args)
    result = rmse_experiment(dgp, _grid_from_arg(args.grid), args.reps, args.seed)
    provenance = {
        "command": "simulate", "dgp": args.dgp, "profile": args.profile,
        "p": args.p, "grid": args.grid, "reps": args.reps, "seed": args.seed,
        "package_version": __version__, "kernel_backend": kernels.active_backend().name,
    }
    write_csv_table(
        args.out,
        ["n", "T", "replicates", "rmse_beta", "rmse_theta1", "failures"],
        [(c.n, c.T, c.replicates, c.rmse_beta, c.rmse_theta1, c.failures)
         for c in result.grid],
        provenance,
    )
    return EXIT_OK


def cmd_qq(args) -> int:
    dgp = _dgp_from_args(args)
    sample = qq_experiment(dgp, args.n, args.t, args.reps, args.seed)
    provenance = {
        "command": "qq", "dgp": args.dgp, "profile": args.profile, "p": args.p,
        "n": args.n, "T": args.t, "reps": args.reps, "seed": args.seed,
        "failures": sample.failures,
        "package_version": __version__, "kernel_backend": kernels.active_backend().name,
    }
    rows = []
    for i in range(len(sample.corrected)):
        rows.append((
            int(sample.replicates[i]),
            float(sample.uncorrected[i, 0]), float(sample.uncorrected[i, 1]),
            float(sample.corrected[i, 0]), float(sample.corrected[i, 1]),
            float(sample.theoretical_quantiles[i]),
        ))
    write_csv_table(
        args.out,
        ["rep", "stat1_nc", "stat2_nc", "stat1_c", "stat2_c", "theo_q"],
        rows, provenance,
    )
    return EXIT_OK


def cmd_diagnose(args) -> int:
    panel = _load_panel(args)
    res = residual_panel(panel)
    temporal = temporal_independence_report(res, args.lags, args.alpha)
    spatial = spatial_independence_report(res, args.alpha, args.max_pairs, args.seed)
    provenance = {
        "command": "diagnose", "input": args.input,
        "input_sha256": sha256_of_file(args.input),
        "lags": args.lags, "alpha": args.alpha,
        "max_pairs": args.max_pairs, "seed": args.seed,
        "note": "sampling error of the per-time mean and sd is neglected",
        "package_version": __version__, "kernel_backend": kernels.active_backend().name,
    }
    rows = []
    for lag in sorted(temporal.per_lag_coverage):
        rows.append(("temporal", lag, fmt(temporal.per_lag_coverage[lag]),
                     temporal.series_tested, temporal.excluded_degenerate,
                     fmt(args.alpha)))
    rows.append(("spatial", "", fmt(spatial.spatial_coverage),
                 spatial.pairs_tested, spatial.excluded_degenerate, fmt(args.alpha)))
    header = ["kind", "lag", "coverage_percent", "tested", "excluded_degenerate", "alpha"]
    if args.out is None:
        text = ",".join(header) + "\n"
        text += "\n".join(",".join(str(c) for c in row) for row in rows)
        _emit(text, None)
    else:
        write_csv_table(args.out, header, rows, provenance)
    return EXIT_OK


_HANDLERS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "qq": cmd_qq,
    "diagnose": cmd_diagnose,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ValidationError, DomainError) as exc:
        print(f"error[invalid_input]: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DegenerateDesignError as exc:
        print(f"error[degenerate_design]: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE_DESIGN
    except SingularityError as exc:
        print(f"error[singular_gamma]: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

"""CSV ingestion, JSON serialisation, and the command-line surface."""

import json
import math

import numpy as np
import pytest

from taylorlaw.cli import (
    EXIT_DEGENERATE_DESIGN,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SINGULAR,
    main,
)
from taylorlaw.errors import ValidationError
from taylorlaw.io import DatasetFile, fmt, json_dumps, load_csv, write_panel_csv
from taylorlaw.kernels import numpy_backend as nb
from taylorlaw.moments import Panel


def labelled_panel():
    values = np.array([[0.0, 1.5, 2.25], [3.0, 4.5, 5.0]])
    return Panel(values, ["siteA", "siteB"], ["1990", "1991", "1992"])


def noisy_panel_file(path, n=20, T=12, seed=3):
    base = np.array([1.0, 2.0, 4.0, 8.0] * (T // 4))
    draws = nb.uniforms(seed, 0, n * T).reshape(n, T)
    panel = Panel((0.5 + draws) * base)
    write_panel_csv(panel, str(path))
    return panel


class TestPanelCsv:
    def test_wide_round_trip_bit_exact(self, tmp_path):
        panel = labelled_panel()
        path = tmp_path / "wide.csv"
        write_panel_csv(panel, str(path), layout="wide")
        again = load_csv(DatasetFile(str(path), "wide"))
        assert np.array_equal(again.values, panel.values)
        assert again.site_labels == panel.site_labels
        assert again.time_labels == panel.time_labels
        # writing the loaded panel reproduces the file byte for byte
        path2 = tmp_path / "wide2.csv"
        write_panel_csv(again, str(path2), layout="wide")
        assert path.read_bytes() == path2.read_bytes()

    def test_unlabelled_round_trip(self, tmp_path):
        values = nb.uniforms(1, 0, 12).reshape(3, 4) * 7.0
        panel = Panel(values)
        path = tmp_path / "plain.csv"
        write_panel_csv(panel, str(path))
        again = load_csv(DatasetFile(str(path), "wide", header=False))
        assert np.array_equal(again.values, values)
        assert again.site_labels is None

    def test_long_equals_wide(self, tmp_path):
        panel = labelled_panel()
        wide, long = tmp_path / "w.csv", tmp_path / "l.csv"
        write_panel_csv(panel, str(wide), layout="wide")
        write_panel_csv(panel, str(long), layout="long")
        from_wide = load_csv(DatasetFile(str(wide), "wide"))
        from_long = load_csv(DatasetFile(str(long), "long"))
        assert np.array_equal(from_wide.values, from_long.values)
        assert from_wide.site_labels == from_long.site_labels
        assert from_wide.time_labels == from_long.time_labels

    def test_negative_value_names_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0,-1.0\n")
        with pytest.raises(ValidationError, match="row 2, column 2"):
            load_csv(DatasetFile(str(path), "wide", header=False))

    def test_ragged_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ValidationError, match="ragged"):
            load_csv(DatasetFile(str(path), "wide", header=False))

    def test_long_missing_cell_listed(self, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text("site,time,value\na,1,1.0\na,2,2.0\nb,1,3.0\n")
        with pytest.raises(ValidationError, match=r"\(site b, time 2\)"):
            load_csv(DatasetFile(str(path), "long"))

    def test_long_duplicate_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("site,time,value\na,1,1.0\na,1,2.0\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_csv(DatasetFile(str(path), "long"))

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "text.csv"
        path.write_text("1.0,x\n2.0,3.0\n")
        with pytest.raises(ValidationError, match="unparseable"):
            load_csv(DatasetFile(str(path), "wide", header=False))


class TestJsonDumps:
    def test_float_formatting_lossless(self):
        x = 0.1 + 0.2
        text = json_dumps({"v": x})
        assert json.loads(text)["v"] == x

    def test_17_digits(self):
        assert fmt(0.05) == "0.050000000000000003"
        assert fmt(1.0) == "1"

    def test_stable_order_and_nesting(self):
        doc = {"b": 1, "a": [1.5, {"x": True, "y": None}]}
        assert json_dumps(doc) == '{"b": 1, "a": [1.5, {"x": true, "y": null}]}'

    def test_non_finite_rendered_null(self):
        assert json_dumps({"v": math.nan}) == '{"v": null}'

    def test_valid_json_with_indent(self):
        doc = {"fit": {"beta": 2.0}, "list": [1, 2, 3], "s": 'quote"inside'}
        parsed = json.loads(json_dumps(doc, indent=2))
        assert parsed["fit"]["beta"] == 2.0
        assert parsed["s"] == 'quote"inside'


class TestCliFit:
    def exact_file(self, tmp_path):
        mus = np.array([1.0, 2.0, 4.0, 8.0])
        values = np.vstack([mus * 0.5, mus * 1.5])  # variance = (mu/2)^2
        path = tmp_path / "exact.csv"
        write_panel_csv(Panel(values), str(path))
        return path

    def test_exact_fit_json(self, tmp_path, capsys):
        path = self.exact_file(tmp_path)
        rc = main(["fit", "--input", str(path), "--no-header"])
        out = capsys.readouterr().out
        assert rc == EXIT_OK
        doc = json.loads(out)
        assert doc["fit"]["beta"] == pytest.approx(2.0, abs=1e-10)
        assert doc["fit"]["theta1"] == pytest.approx(math.log(0.25), abs=1e-10)
        assert doc["conventional"]["zero_rss_degenerate"] is True
        width = (doc["conventional"]["beta"]["upper"]
                 - doc["conventional"]["beta"]["lower"])
        assert width == pytest.approx(0.0, abs=1e-9)
        assert doc["provenance"]["input_sha256"]

    def test_byte_identical_reruns(self, tmp_path):
        noisy_panel_file(tmp_path / "p.csv")
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        args = ["fit", "--input", str(tmp_path / "p.csv"), "--no-header", "--alpha", "0.05"]
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()

    def test_temporal_axis_equals_fit_of_transpose(self, tmp_path):
        panel = noisy_panel_file(tmp_path / "p.csv")
        write_panel_csv(Panel(panel.values.T.copy()), str(tmp_path / "pt.csv"))
        o1, o2 = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["fit", "--input", str(tmp_path / "p.csv"), "--no-header",
                     "--axis", "temporal", "--out", str(o1)]) == EXIT_OK
        assert main(["fit", "--input", str(tmp_path / "pt.csv"), "--no-header",
                     "--axis", "spatial", "--out", str(o2)]) == EXIT_OK
        d1, d2 = json.loads(o1.read_text()), json.loads(o2.read_text())
        assert d1["fit"]["beta"] == d2["fit"]["beta"]
        assert d1["fit"]["theta1"] == d2["fit"]["theta1"]

    def test_rescale_moves_intercept_not_slope(self, tmp_path):
        noisy_panel_file(tmp_path / "p.csv")
        o1, o2 = tmp_path / "a.json", tmp_path / "b.json"
        base = ["fit", "--input", str(tmp_path / "p.csv"), "--no-header"]
        assert main(base + ["--out", str(o1)]) == EXIT_OK
        assert main(base + ["--rescale", "grand_mean", "--out", str(o2)]) == EXIT_OK
        d1, d2 = json.loads(o1.read_text()), json.loads(o2.read_text())
        assert d2["fit"]["beta"] == pytest.approx(d1["fit"]["beta"], abs=1e-9)
        assert d2["fit"]["theta1"] != d1["fit"]["theta1"]

    def test_csv_format(self, tmp_path):
        noisy_panel_file(tmp_path / "p.csv")
        out = tmp_path / "fit.csv"
        assert main(["fit", "--input", str(tmp_path / "p.csv"), "--no-header",
                     "--format", "csv", "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "key,value"
        assert any(line.startswith("fit.beta,") for line in lines)

    def test_missing_file_exit_code(self, tmp_path, capsys):
        assert main(["fit", "--input", str(tmp_path / "nope.csv")]) == EXIT_PARSE

    def test_negative_value_exit_code(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0,-1.0\n")
        assert main(["fit", "--input", str(path), "--no-header"]) == EXIT_PARSE

    def test_degenerate_design_exit_code(self, tmp_path):
        path = tmp_path / "const.csv"
        path.write_text("1.0,1.0\n1.0,1.0\n")
        assert main(["fit", "--input", str(path), "--no-header"]) == EXIT_DEGENERATE_DESIGN

    def test_singular_gamma_exit_code(self, tmp_path):
        # One all-zero column (excluded) leaves a single rank-1 sandwich term.
        path = tmp_path / "singular.csv"
        path.write_text("0.0,0.0\n0.0,4.0\n")
        assert main(["fit", "--input", str(path), "--no-header"]) == EXIT_SINGULAR

    def test_degenerate_times_drop_mode(self, tmp_path):
        # A zero column stays in the averages under keep (log -> 0) and is
        # removed with renormalisation under drop.
        values = np.array([[1.0, 0.0, 2.0, 8.0],
                           [3.0, 0.0, 6.0, 16.0],
                           [2.0, 0.0, 4.0, 24.0]])
        path = tmp_path / "zeros.csv"
        write_panel_csv(Panel(values), str(path))
        o1, o2 = tmp_path / "keep.json", tmp_path / "drop.json"
        base = ["fit", "--input", str(path), "--no-header"]
        assert main(base + ["--degenerate-times", "keep", "--out", str(o1)]) == EXIT_OK
        assert main(base + ["--degenerate-times", "drop", "--out", str(o2)]) == EXIT_OK
        keep, drop = json.loads(o1.read_text()), json.loads(o2.read_text())
        assert keep["fit"]["design"]["zero_mean_count"] == 1
        assert drop["fit"]["design"]["T_used"] == 3
        assert keep["fit"]["design"]["T_used"] == 4
        assert keep["fit"]["beta"] != drop["fit"]["beta"]


class TestCliFlagPaths:
    def test_unbiased_variance_mode(self, tmp_path):
        noisy_panel_file(tmp_path / "p.csv")
        o1, o2 = tmp_path / "a.json", tmp_path / "b.json"
        base = ["fit", "--input", str(tmp_path / "p.csv"), "--no-header"]
        assert main(base + ["--variance", "biased", "--out", str(o1)]) == EXIT_OK
        assert main(base + ["--variance", "unbiased", "--out", str(o2)]) == EXIT_OK
        d1, d2 = json.loads(o1.read_text()), json.loads(o2.read_text())
        assert d2["fit"]["variance_mode"] == "unbiased"
        # slope untouched, intercept moves by log(n/(n-1)) with n = 20
        assert d2["fit"]["beta"] == pytest.approx(d1["fit"]["beta"], abs=1e-10)
        assert d2["fit"]["theta1"] - d1["fit"]["theta1"] == pytest.approx(
            math.log(20.0 / 19.0), abs=1e-10)

    def test_qq_with_zero_inflation(self, tmp_path):
        out = tmp_path / "qq.csv"
        assert main(["qq", "--dgp", "zero_inflated_chisq1", "--p", "0.6",
                     "--n", "25", "--t", "25", "--reps", "6", "--seed", "2",
                     "--out", str(out)]) == EXIT_OK
        assert out.read_text().count("\n") >= 3

    def test_simulate_custom_profile(self, tmp_path):
        out = tmp_path / "rmse.csv"
        assert main(["simulate", "--dgp", "poisson", "--profile", "custom",
                     "--lambdas", "1.0,2.0,4.0,8.0,16.0,2.5,3.5,9.0",
                     "--grid", "20x8", "--reps", "5", "--seed", "3",
                     "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[2].split(",")[0] == "20"

    def test_missing_p_for_zero_inflation(self, tmp_path):
        assert main(["simulate", "--dgp", "zero_inflated_chisq1",
                     "--grid", "10x8", "--reps", "2", "--seed", "1",
                     "--out", str(tmp_path / "x.csv")]) == EXIT_PARSE

    def test_all_fit_flags_compose(self, tmp_path):
        noisy_panel_file(tmp_path / "p.csv", n=24, T=16)
        out = tmp_path / "full.json"
        assert main(["fit", "--input", str(tmp_path / "p.csv"), "--no-header",
                     "--axis", "temporal", "--variance", "unbiased",
                     "--rescale", "grand_mean", "--bias-correction", "off",
                     "--degenerate-times", "drop", "--alpha", "0.01",
                     "--out", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["fit"]["variance_mode"] == "unbiased"
        assert doc["asymptotics"]["regime"] == "small_T_over_n"
        assert doc["asymptotics"]["m_n"] == [0, 0]
        # temporal axis: 16 sites' worth of times become the moment axis
        assert doc["asymptotics"]["n"] == 16 and doc["asymptotics"]["T"] == 24


class TestCliSimulate:
    def test_csv_schema_and_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["simulate", "--dgp", "poisson", "--grid", "10x8,20x8",
                "--reps", "5", "--seed", "42"]
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().splitlines()
        assert lines[0].startswith("# provenance ")
        assert lines[1] == "n,T,replicates,rmse_beta,rmse_theta1,failures"
        assert len(lines) == 4
        assert lines[2].split(",")[0] == "10"

    def test_bad_grid_exit(self, tmp_path):
        assert main(["simulate", "--dgp", "poisson", "--grid", "10by8",
                     "--reps", "2", "--seed", "1",
                     "--out", str(tmp_path / "x.csv")]) == EXIT_PARSE


class TestCliQq:
    def test_schema_row_count_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["qq", "--dgp", "poisson", "--profile", "three_plus_cos",
                "--n", "25", "--t", "25", "--reps", "8", "--seed", "7"]
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().splitlines()
        assert lines[1] == "rep,stat1_nc,stat2_nc,stat1_c,stat2_c,theo_q"
        prov = json.loads(lines[0].removeprefix("# provenance "))
        assert len(lines) - 2 == 8 - prov["failures"]


class TestCliDiagnose:
    def test_rows_and_determinism(self, tmp_path):
        noisy_panel_file(tmp_path / "p.csv", n=30, T=20)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["diagnose", "--input", str(tmp_path / "p.csv"), "--no-header",
                "--lags", "3", "--alpha", "0.05", "--seed", "5"]
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().splitlines()
        assert lines[1] == "kind,lag,coverage_percent,tested,excluded_degenerate,alpha"
        kinds = [line.split(",")[0] for line in lines[2:]]
        assert kinds == ["temporal", "temporal", "temporal", "spatial"]

    def test_constant_panel_exit(self, tmp_path):
        path = tmp_path / "const.csv"
        path.write_text("2.0,2.0\n2.0,2.0\n")
        assert main(["diagnose", "--input", str(path), "--no-header"]) == EXIT_PARSE


class TestAtomicWrite:
    def test_no_partial_file_on_error(self, tmp_path):
        from taylorlaw.io import atomic_write_text

        target = tmp_path / "out.txt"
        atomic_write_text(str(target), "content")
        assert target.read_text() == "content"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


class TestSubprocessDeterminism:
    def test_fresh_processes_agree(self, tmp_path):
        # Same flags and seed in two separate interpreter processes must
        # produce byte-identical files (no hidden global state).
        import subprocess
        import sys

        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            proc = subprocess.run(
                [sys.executable, "-m", "taylorlaw.cli", "simulate",
                 "--dgp", "chisq1", "--grid", "12x8", "--reps", "6",
                 "--seed", "11", "--out", str(out)],
                capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

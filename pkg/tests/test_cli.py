import contextlib
import io
import json

import numpy as np
import pytest

from triocast.cli import main

from .conftest import DEMO_CSV, DEMO_SCHEMA


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            rc = main([str(a) for a in argv])
        except SystemExit as exc:  # argparse --help
            rc = exc.code or 0
    return rc, out.getvalue(), err.getvalue()


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


@pytest.fixture
def small_dataset(tmp_path):
    # Stationary indicators keep the last-row base point interior to the
    # training hull, so sensitivity analysis sees a responsive surface.
    rng = np.random.default_rng(1)
    n = 16
    years = np.arange(2005, 2005 + n)

    def draw_ar1(phi, sd, mean):
        x = np.empty(n)
        e = rng.normal(0.0, sd, n)
        x[0] = e[0] / np.sqrt(1.0 - phi * phi)
        for t in range(1, n):
            x[t] = phi * x[t - 1] + e[t]
        return mean + x

    a = draw_ar1(0.7, 6.0, 100.0)
    b = draw_ar1(0.5, 3.0, 40.0)
    noise = rng.normal(0.0, 1.0, n)
    t = np.arange(n, dtype=float)
    y = 150.0 + 5.0 * (a - 100.0) + np.where(t.astype(int) % 2 == 0, 8.0, -8.0)
    y = y + rng.normal(0.0, 2.0, n)
    rows = ["year,a,b,noise,y"]
    rows += [
        f"{yr},{float(a[i])!r},{float(b[i])!r},{float(noise[i])!r},{float(y[i])!r}"
        for i, yr in enumerate(years)
    ]
    csv = write(tmp_path, "small.csv", "\n".join(rows) + "\n")
    schema = write(
        tmp_path,
        "small_schema.json",
        json.dumps({"indicators": ["a", "b", "noise"], "targets": ["y"]}),
    )
    return csv, schema


class TestExitCodes:
    def test_unknown_command_is_usage_error(self):
        rc, _, err = run_cli(["frobnicate"])
        assert rc == 1 and err.startswith("error[usage]")

    def test_unknown_flag_is_usage_error(self):
        rc, _, err = run_cli(["prep", "--input", "x.csv", "--bogus"])
        assert rc == 1 and "error[usage]" in err

    def test_missing_input_is_data_error(self, tmp_path):
        rc, _, err = run_cli(
            ["prep", "--input", tmp_path / "nope.csv", "--schema", DEMO_SCHEMA,
             "--out-dir", tmp_path]
        )
        assert rc == 2 and err.startswith("error[data]")

    @pytest.mark.filterwarnings("ignore:forest contains no splits")
    def test_constant_target_is_numerical_error(self, tmp_path):
        csv = write(
            tmp_path, "const.csv",
            "year,a,b\n" + "\n".join(f"{2000+i},{i},5" for i in range(10)) + "\n",
        )
        schema = write(tmp_path, "s.json", '{"indicators": ["a"], "targets": ["b"]}')
        rc, _, err = run_cli(
            ["importance", "--input", csv, "--schema", schema, "--out-dir", tmp_path]
        )
        assert rc == 3 and err.startswith("error[numeric]")

    def test_help_lists_commands(self):
        rc, out, _ = run_cli(["--help"])
        assert rc == 0
        for command in ("prep", "correlate", "importance", "forecast", "sensitivity", "evaluate"):
            assert command in out

    @pytest.mark.parametrize(
        "command", ["prep", "correlate", "importance", "forecast", "sensitivity", "evaluate"]
    )
    def test_every_command_has_help(self, command):
        rc, out, _ = run_cli([command, "--help"])
        assert rc == 0 and "--out-dir" in out


class TestPrep:
    def test_reports_missing_rate_and_ks(self, tmp_path):
        rc, _, _ = run_cli(
            ["prep", "--input", DEMO_CSV, "--schema", DEMO_SCHEMA, "--out-dir", tmp_path]
        )
        assert rc == 0
        report = json.loads((tmp_path / "prep_report.json").read_text())
        assert report["missing_rate"] == pytest.approx(0.0239, abs=5e-4)
        assert all("ks_p_value" in c or "ks_error" in c for c in report["columns"].values())
        cleaned = (tmp_path / "cleaned.csv").read_text()
        assert ",," not in cleaned  # no empty cells survive imputation
        assert not any(line.endswith(",") for line in cleaned.splitlines())

    def test_clean_input_round_trips_values(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        out = tmp_path / "out"
        rc, _, _ = run_cli(["prep", "--input", csv, "--schema", schema, "--out-dir", out])
        assert rc == 0
        original = csv.read_text().splitlines()
        cleaned = (out / "cleaned.csv").read_text().splitlines()
        assert len(original) == len(cleaned)
        for line_a, line_b in zip(original[1:], cleaned[1:]):
            va = [float(x) for x in line_a.split(",")]
            vb = [float(x) for x in line_b.split(",")]
            assert va == vb

    def test_malformed_csv_names_location(self, tmp_path):
        csv = write(tmp_path, "bad.csv", "year,a\n2005,1\n2006,zap\n")
        schema = write(tmp_path, "s.json", '{"indicators": ["a"], "targets": []}')
        rc, _, err = run_cli(["prep", "--input", csv, "--schema", schema, "--out-dir", tmp_path])
        assert rc == 2
        assert ":3" in err and "'a'" in err

    def test_sidecar_carries_timestamp_payload_does_not(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        out = tmp_path / "out"
        run_cli(["prep", "--input", csv, "--schema", schema, "--out-dir", out])
        meta = json.loads((out / "run_meta.json").read_text())
        assert "timestamp_utc" in meta
        assert "timestamp" not in (out / "prep_report.json").read_text()


class TestCorrelate:
    def test_hand_checked_fixture(self, tmp_path):
        csv = write(
            tmp_path, "t.csv",
            "year,x,y\n2005,1,1\n2006,2,3\n2007,2,2\n2008,4,4\n",
        )
        rc, _, _ = run_cli(["correlate", "--input", csv, "--out-dir", tmp_path])
        assert rc == 0
        lines = (tmp_path / "correlation.csv").read_text().splitlines()
        assert lines[0] == ",x,y"
        # average-rank Spearman of the tie fixture = 3/sqrt(10) = 0.948683
        assert lines[1] == "x,1.000000,0.948683"

    def test_constant_column_warns_and_leaves_blank(self, tmp_path):
        csv = write(tmp_path, "t.csv", "year,c,y\n2005,7,1\n2006,7,5\n2007,7,2\n")
        rc, _, err = run_cli(["correlate", "--input", csv, "--out-dir", tmp_path])
        assert rc == 0
        assert "constant" in err
        lines = (tmp_path / "correlation.csv").read_text().splitlines()
        assert lines[1] == "c,1.000000,"


class TestImportance:
    def test_dominant_feature_ranks_first(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        out = tmp_path / "out"
        rc, _, _ = run_cli(
            ["importance", "--input", csv, "--schema", schema, "--out-dir", out,
             "--trees", "60", "--seed", "4"]
        )
        assert rc == 0
        lines = (out / "importance_y.csv").read_text().splitlines()
        assert lines[0] == "feature,raw_importance,standardized_importance,rank"
        first = lines[1].split(",")
        assert first[0] == "a" and first[3] == "1"

    def test_deterministic_across_runs(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        outs = []
        for sub in ("r1", "r2"):
            out = tmp_path / sub
            run_cli(["importance", "--input", csv, "--schema", schema, "--out-dir", out,
                     "--trees", "40", "--seed", "9"])
            outs.append((out / "importance_y.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_missing_target_errors(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        rc, _, err = run_cli(
            ["importance", "--input", csv, "--schema", schema, "--out-dir", tmp_path,
             "--target", "nope"]
        )
        assert rc == 2 and "not a target" in err


class TestForecast:
    def test_report_files_and_combined_identity(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        out = tmp_path / "out"
        cfg = write(tmp_path, "cfg.json", '{"n_trees": 40}')
        rc, _, _ = run_cli(
            ["forecast", "--input", csv, "--schema", schema, "--out-dir", out,
             "--horizon", "3", "--seed", "2", "--config", cfg]
        )
        assert rc == 0
        report = json.loads((out / "forecast_report.json").read_text())
        tgt = report["targets"]["y"]
        for c, rf, hw in zip(tgt["combined"], tgt["rf"], tgt["hw"]):
            assert c == pytest.approx(tgt["alpha"] * rf + tgt["beta"] * hw, abs=1e-9)
        assert (out / "forecast_targets.csv").exists()
        assert (out / "forecast_indicators.csv").exists()
        assert (out / "correlograms" / "a.csv").exists()

    def test_zero_horizon_is_usage_error(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        rc, _, err = run_cli(
            ["forecast", "--input", csv, "--schema", schema, "--out-dir", tmp_path,
             "--horizon", "0"]
        )
        assert rc == 1 and "error[usage]" in err

    def test_grid_flag_needs_enough_validation_data(self, tmp_path):
        rng = np.random.default_rng(3)
        rows = ["year,a,y"]
        for i in range(9):
            rows.append(f"{2005+i},{float(i)!r},{float(2 * i + rng.normal())!r}")
        csv = write(tmp_path, "tiny.csv", "\n".join(rows) + "\n")
        schema = write(tmp_path, "s.json", '{"indicators": ["a"], "targets": ["y"]}')
        rc, _, err = run_cli(
            ["forecast", "--input", csv, "--schema", schema, "--out-dir", tmp_path,
             "--grid-weights", "--validation-years", "3"]
        )
        assert rc == 2 and "training rows" in err

    def test_grid_flag_changes_weights_field(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        cfg = write(tmp_path, "cfg.json", '{"n_trees": 30}')
        fixed_out, grid_out = tmp_path / "fixed", tmp_path / "grid"
        run_cli(["forecast", "--input", csv, "--schema", schema, "--out-dir", fixed_out,
                 "--horizon", "2", "--config", cfg])
        run_cli(["forecast", "--input", csv, "--schema", schema, "--out-dir", grid_out,
                 "--horizon", "2", "--config", cfg, "--grid-weights",
                 "--validation-years", "3"])
        fixed = json.loads((fixed_out / "forecast_report.json").read_text())
        grid = json.loads((grid_out / "forecast_report.json").read_text())
        assert fixed["weights_mode"] == "fixed" and fixed["targets"]["y"]["alpha"] == 0.7
        assert grid["weights_mode"] == "grid-search"
        assert grid["targets"]["y"]["validation"] is not None

    def test_unknown_config_key_rejected(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        cfg = write(tmp_path, "cfg.json", '{"tree_count": 40}')
        rc, _, err = run_cli(
            ["forecast", "--input", csv, "--schema", schema, "--out-dir", tmp_path,
             "--config", cfg]
        )
        assert rc == 2 and "unknown config key" in err


class TestSensitivity:
    def test_report_structure_and_dummy_factor(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        out = tmp_path / "out"
        rc, stdout, _ = run_cli(
            ["sensitivity", "--input", csv, "--schema", schema, "--out-dir", out,
             "--factor", "a", "--sobol-n", "512", "--trees", "40", "--seed", "6"]
        )
        assert rc == 0
        report = json.loads((out / "sensitivity_report.json").read_text())
        assert set(report["factors"]) == {"a", "b", "noise"}
        # the pure-noise indicator explains almost none of the variance
        assert abs(report["factors"]["noise"]["s1"]) < 0.1
        assert report["seed"] == 6 and report["delta"] == 0.05
        assert "a: S=" in stdout

    def test_deterministic(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        payloads = []
        for sub in ("s1", "s2"):
            out = tmp_path / sub
            run_cli(["sensitivity", "--input", csv, "--schema", schema, "--out-dir", out,
                     "--sobol-n", "256", "--trees", "25", "--seed", "3"])
            payloads.append((out / "sensitivity_report.json").read_bytes())
        assert payloads[0] == payloads[1]

    def test_unknown_factor(self, small_dataset, tmp_path):
        csv, schema = small_dataset
        rc, _, err = run_cli(
            ["sensitivity", "--input", csv, "--schema", schema, "--out-dir", tmp_path,
             "--factor", "zzz", "--trees", "10"]
        )
        assert rc == 2 and "not an indicator" in err


class TestEvaluate:
    def test_perfect_and_fixture_metrics(self, tmp_path):
        act = write(tmp_path, "act.csv", "year,value\n2001,1\n2002,2\n2003,3\n")
        flat = write(tmp_path, "flat.csv", "year,value\n2001,2\n2002,2\n2003,2\n")
        exact = write(tmp_path, "exact.csv", "year,value\n2001,1\n2002,2\n2003,3\n")
        out = tmp_path / "out"
        rc, _, _ = run_cli(
            ["evaluate", "--actual", act, "--predicted", flat, exact, "--out-dir", out]
        )
        assert rc == 0
        report = json.loads((out / "evaluation.json").read_text())
        assert report["models"]["exact"] == {"mae": 0.0, "r2": 1.0, "rmse": 0.0}
        assert report["models"]["flat"]["mae"] == pytest.approx(2.0 / 3.0)
        comparison = (out / "comparison.csv").read_text().splitlines()
        assert comparison[0] == "model,mae,rmse,r2"
        assert len(comparison) == 3

    def test_year_mismatch_is_data_error(self, tmp_path):
        act = write(tmp_path, "act.csv", "year,value\n2001,1\n2002,2\n")
        pred = write(tmp_path, "pred.csv", "year,value\n2001,1\n2003,2\n")
        rc, _, err = run_cli(["evaluate", "--actual", act, "--predicted", pred,
                              "--out-dir", tmp_path])
        assert rc == 2 and "years do not match" in err

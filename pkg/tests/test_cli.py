import csv
import json
import math

import numpy as np
import pytest
from scipy import stats

from pmax_fields.cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO, EXIT_OK, EXIT_UNSUPPORTED, main
from pmax_fields.config import model_from_config
from pmax_fields.io import read_sample_csv
from pmax_fields.tail_coeffs import TailContext, joint_cdf_builder


def model(innovation="independent", alpha=(1.5, 1.5), distance=1.0, **extra):
    doc = {
        "innovation": innovation,
        "weights": ["2/3", "1/3"],
        "z_coupling": "common",
        "locations": [{"id": "x", "x1": 0.0, "x2": 0.0}, {"id": "xp", "x1": distance, "x2": 0.0}],
        "alpha": {"x": alpha[0], "xp": alpha[1]},
    }
    doc.update(extra)
    return doc


@pytest.fixture
def write_config(tmp_path):
    def _write(doc, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)
    return _write


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# --- simulate -------------------------------------------------------------

def test_simulate_row_count(tmp_path, write_config, capsys):
    cfg = write_config({"seed": 5, "model": model(), "run": {"n_time": 100}})
    out = tmp_path / "s.csv"
    code, stdout, _ = run(capsys, "simulate", "--config", cfg, "--out", out)
    assert code == EXIT_OK
    assert len(out.read_text().splitlines()) == 201
    assert "seed: 5" in stdout and "spec_digest:" in stdout


def test_simulate_byte_identical(tmp_path, write_config, capsys):
    cfg = write_config({"model": model(innovation="schlather")})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "simulate", "--config", cfg, "--seed", 77, "--n-time", 300, "--out", a, "--threads", 1)
    run(capsys, "simulate", "--config", cfg, "--seed", 77, "--n-time", 300, "--out", b, "--threads", 8)
    assert a.read_bytes() == b.read_bytes()


def test_simulate_seed_flag_overrides(tmp_path, write_config, capsys):
    cfg = write_config({"seed": 1, "model": model()})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "simulate", "--config", cfg, "--n-time", 20, "--out", a)
    _, stdout, _ = run(capsys, "simulate", "--config", cfg, "--seed", 2, "--n-time", 20, "--out", b)
    assert a.read_bytes() != b.read_bytes()
    assert "seed: 2" in stdout


def test_simulate_schlather_joint_cdf(tmp_path, write_config, capsys):
    doc = {"seed": 21, "model": model(innovation="schlather", alpha=(2.0, 2.0)), "run": {"n_time": 10_000}}
    cfg = write_config(doc)
    out = tmp_path / "s.csv"
    assert run(capsys, "simulate", "--config", cfg, "--out", out)[0] == EXIT_OK
    sample = read_sample_csv(out)
    emp = np.mean((sample.column("x") <= 1.0) & (sample.column("xp") <= 1.0))
    spec = model_from_config(doc)
    ctx = TailContext(0, spec.location("x"), spec.location("xp"), 2.0, 2.0)
    assert emp == pytest.approx(joint_cdf_builder(spec, ctx).cdf_ab(1.0, 1.0), abs=0.02)


def test_simulate_missing_n_time(tmp_path, write_config, capsys):
    cfg = write_config({"model": model()})
    code, _, err = run(capsys, "simulate", "--config", cfg, "--out", tmp_path / "s.csv")
    assert code == EXIT_CONFIG and "n_time" in err


def test_simulate_schema_error(tmp_path, write_config, capsys):
    cfg = write_config({"model": model(alpha=(-1.0, 1.0)), "oops": 1})
    code, _, err = run(capsys, "simulate", "--config", cfg, "--n-time", 5, "--out", tmp_path / "s.csv")
    assert code == EXIT_CONFIG
    assert "oops" in err and "alpha" in err


def test_simulate_io_errors(tmp_path, write_config, capsys):
    cfg = write_config({"model": model()})
    code, _, _ = run(capsys, "simulate", "--config", cfg, "--n-time", 5, "--out", tmp_path / "no" / "s.csv")
    assert code == EXIT_IO
    code, _, _ = run(capsys, "simulate", "--config", tmp_path / "missing.json", "--n-time", 5,
                     "--out", tmp_path / "s.csv")
    assert code == EXIT_IO


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--seed", "-3"])
    assert info.value.code == 2


# --- coeffs ---------------------------------------------------------------

def test_coeffs_temporal(tmp_path, write_config, capsys):
    cfg = write_config({"model": model(alpha=(1.5, 1.5))})
    out = tmp_path / "c.json"
    code, stdout, _ = run(capsys, "coeffs", "--config", cfg, "--r", 1, "--x", "x", "--out", out)
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report == json.loads(stdout)
    for key in ("regime", "r", "alpha_x", "alpha_xp", "h", "lambda_closed", "lambda_oracle",
                "eta_closed", "eta_oracle", "branch_labels", "convergence_flags"):
        assert key in report
    assert report["regime"] == "temporal"
    assert report["lambda_closed"] == pytest.approx(1 / 3)
    assert report["lambda_oracle"] == pytest.approx(1 / 3, abs=0.02)
    assert report["eta_closed"] == 1.0


def test_coeffs_spatial_eta(write_config, capsys):
    cfg = write_config({"model": model(alpha=(0.5, 2.0)), "run": {"r": 0, "x": "x", "xp": "xp"}})
    code, stdout, _ = run(capsys, "coeffs", "--config", cfg)
    assert code == EXIT_OK
    report = json.loads(stdout)
    assert report["eta_closed"] == pytest.approx(1 / 3)
    assert report["eta_oracle"] == pytest.approx(1 / 3, abs=0.02)


def test_coeffs_schlather_reports_both_lambda_forms(write_config, capsys):
    cfg = write_config({"model": model(innovation="schlather", alpha=(2.0, 2.0))})
    code, stdout, _ = run(capsys, "coeffs", "--config", cfg, "--r", 0, "--x", "x", "--xp", "xp")
    assert code == EXIT_OK
    report = json.loads(stdout)
    assert report["lambda_composed"] == pytest.approx(2 * report["lambda_closed"])
    assert report["lambda_oracle"] == pytest.approx(report["lambda_composed"], abs=0.02)
    assert report["eta_closed"] is None


def test_coeffs_degenerate(write_config, capsys):
    cfg = write_config({"model": model()})
    code, _, err = run(capsys, "coeffs", "--config", cfg, "--r", 0, "--x", "x", "--xp", "x")
    assert code == EXIT_DOMAIN and "degenerate" in err


def test_coeffs_unsupported_model(write_config, capsys):
    cfg = write_config({"model": model(z_coupling="independent")})
    code, _, err = run(capsys, "coeffs", "--config", cfg, "--r", 1, "--x", "x")
    assert code == EXIT_UNSUPPORTED and "unsupported" in err


def test_coeffs_unknown_location(write_config, capsys):
    cfg = write_config({"model": model()})
    code, _, _ = run(capsys, "coeffs", "--config", cfg, "--r", 1, "--x", "nowhere")
    assert code == EXIT_CONFIG


# --- estimate -------------------------------------------------------------

def simulated_file(tmp_path, write_config, capsys, alpha, n, seed=3):
    cfg = write_config({"seed": seed, "model": {"locations": [{"id": "x"}], "alpha": {"x": alpha}}},
                       name=f"sim{alpha}.json")
    out = tmp_path / f"sim{alpha}.csv"
    assert run(capsys, "simulate", "--config", cfg, "--n-time", n, "--out", out)[0] == EXIT_OK
    return out


def test_estimate_accuracy(tmp_path, write_config, capsys):
    path = simulated_file(tmp_path, write_config, capsys, 0.5, 5000)
    code, stdout, _ = run(capsys, "estimate", "--input", path, "--location", "x", "--k", 95)
    assert code == EXIT_OK
    report = json.loads(stdout)
    assert report["value"] == pytest.approx(0.5, abs=0.03)
    assert report["n_valid"] + report["n_dropped"] == 5000
    assert "drop_reasons" in report


def test_estimate_degenerate_file(tmp_path, capsys):
    path = tmp_path / "tiny.csv"
    path.write_text("n,loc,value\n1,x,0.5\n2,x,0.6\n3,x,0.7\n")
    code, _, err = run(capsys, "estimate", "--input", path)
    assert code == EXIT_DOMAIN
    assert "diagnostics" in err


def test_estimate_percentiles_heavy_tail(tmp_path, write_config, capsys):
    path = simulated_file(tmp_path, write_config, capsys, 2.0, 2000)
    ends = {}
    for k in (75, 95):
        code, stdout, _ = run(capsys, "estimate", "--input", path, "--k", k)
        assert code == EXIT_OK
        report = json.loads(stdout)
        ends[k] = (report["grid_start"], report["grid_end"])
    assert ends[75][0] == ends[95][0] == 1.1
    assert ends[75][1] < ends[95][1]


def test_estimate_missing_input(tmp_path, capsys):
    code, _, _ = run(capsys, "estimate", "--input", tmp_path / "none.csv")
    assert code == EXIT_IO


# --- mc-table -------------------------------------------------------------

def test_mc_table_default_grid(tmp_path, write_config, capsys):
    cfg = write_config({"seed": 1, "run": {"example": 1, "replicates": 2}})
    out = tmp_path / "mc.csv"
    code, stdout, _ = run(capsys, "mc-table", "--config", cfg, "--out", out, "--threads", 1)
    assert code == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["alpha", "n", "percentile", "mean", "bias", "sd", "rmse", "failures"]
    assert len(rows) == 41
    assert "wall-clock" in stdout and "failures" in stdout


def test_mc_table_thread_invariance(tmp_path, write_config, capsys):
    cfg = write_config({"seed": 8, "run": {"example": 2, "alphas": [0.5, 1.5], "sample_sizes": [200],
                                           "percentiles": [95, 75], "replicates": 6}})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "mc-table", "--config", cfg, "--out", a, "--threads", 1)
    run(capsys, "mc-table", "--config", cfg, "--out", b, "--threads", 8)
    assert a.read_bytes() == b.read_bytes()


def test_mc_table_example_from_model(tmp_path, write_config, capsys):
    cfg = write_config({"model": model(innovation="schlather", z_coupling="independent"),
                        "run": {"replicates": 2}})
    code, _, _ = run(capsys, "mc-table", "--config", cfg, "--out", tmp_path / "mc.csv")
    assert code == EXIT_UNSUPPORTED


# --- figures --------------------------------------------------------------

def read_pairs(path):
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["u", "v"]
    return np.array(rows[1:], dtype=float)


def test_figures_spatial_concordance(tmp_path, write_config, capsys):
    cfg = write_config({"seed": 4, "model": model(alpha=(0.5, 0.5)),
                        "run": {"n_time": 10_000, "r": 0, "x": "x", "xp": "xp"}})
    prefix = tmp_path / "fig"
    assert run(capsys, "figures", "--config", cfg, "--out", prefix)[0] == EXIT_OK
    pairs = read_pairs(f"{prefix}_r0_x_xp_a0.5_0.5.csv")
    assert len(pairs) == 10_000
    assert np.all((pairs > 0) & (pairs < 1))
    assert stats.kendalltau(pairs[:, 0], pairs[:, 1]).statistic > 0.5
    svg = open(f"{prefix}_r0_x_xp_a0.5_0.5.svg").read()
    assert svg.count("<circle") == 5000


def test_figures_lag_two_independence(tmp_path, write_config, capsys):
    cfg = write_config({"seed": 9, "model": model(alpha=(1.5, 1.5)), "run": {"n_time": 10_000}})
    prefix = tmp_path / "fig"
    assert run(capsys, "figures", "--config", cfg, "--out", prefix, "--r", 2, "--x", "x")[0] == EXIT_OK
    pairs = read_pairs(f"{prefix}_r2_x_x_a1.5_1.5.csv")
    q = np.quantile(pairs[:, 0], 0.95)
    exceed = pairs[:, 0] > q
    frac = np.mean(pairs[exceed, 1] > np.quantile(pairs[:, 1], 0.95))
    se = math.sqrt(0.05 * 0.95 / exceed.sum())
    assert abs(frac - 0.05) < 3 * se


def test_figures_alpha_settings(tmp_path, write_config, capsys):
    cfg = write_config({"model": model(alpha=(1.0, 1.0)),
                        "run": {"n_time": 200, "x": "x", "xp": "xp", "point_cap": 50,
                                "alpha_settings": [{"x": 0.5}, {"x": 2.0, "xp": 0.5}]}})
    prefix = tmp_path / "fig"
    assert run(capsys, "figures", "--config", cfg, "--out", prefix, "--transform", "raw")[0] == EXIT_OK
    for stem in ("r0_x_xp_a0.5_1", "r0_x_xp_a2_0.5"):
        assert (tmp_path / f"fig_{stem}.csv").exists()
        assert open(tmp_path / f"fig_{stem}.svg").read().count("<circle") == 50


def test_figures_deterministic(tmp_path, write_config, capsys):
    cfg = write_config({"seed": 2, "model": model(), "run": {"n_time": 300}})
    for name in ("a", "b"):
        run(capsys, "figures", "--config", cfg, "--out", tmp_path / name, "--r", 1)
    assert (tmp_path / "a_r0_x_x_a1.5_1.5.csv").exists() is False
    a = (tmp_path / "a_r1_x_x_a1.5_1.5.svg").read_text()
    b = (tmp_path / "b_r1_x_x_a1.5_1.5.svg").read_text()
    assert a == b


def test_figures_empty_sample(tmp_path, write_config, capsys):
    cfg = write_config({"model": model(), "run": {"n_time": 2, "r": 2}})
    code, _, _ = run(capsys, "figures", "--config", cfg, "--out", tmp_path / "fig")
    assert code == EXIT_DOMAIN

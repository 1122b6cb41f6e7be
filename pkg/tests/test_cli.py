import json
import subprocess
import sys

import numpy as np
import pytest

from mshap import (
    AlphaMethod,
    ScoreParams,
    additive_model,
    combine,
    explain_matrix,
    explanation_to_table,
    mean_product_baseline,
    read_shap_table,
    score_matrices,
    write_shap_table,
    write_value_table,
)
from mshap.cli import main
from conftest import make_parts

NAMES = ("x1", "x2", "x3")


def write_pair(tmp_path, rng, n=12, names=NAMES, seed_models=(1.0, 2.0)):
    """One deterministic pair of exactly-explained part tables on disk."""
    p = len(names)
    X = rng.uniform(-2, 2, (n, p))
    background = X[: max(3, n // 3)]
    f = additive_model(rng.uniform(-2, 2, p), intercept=seed_models[0])
    g = additive_model(rng.uniform(-2, 2, p), intercept=seed_models[1])
    expl_f = explain_matrix(f, X, background, feature_names=names)
    expl_g = explain_matrix(g, X, background, feature_names=names)
    f_path, g_path = tmp_path / "f.csv", tmp_path / "g.csv"
    write_shap_table(f_path, explanation_to_table(expl_f))
    write_shap_table(g_path, explanation_to_table(expl_g))
    return f_path, g_path, expl_f, expl_g, X


def test_combine_matches_library_bytes(tmp_path, rng):
    f_path, g_path, expl_f, expl_g, _ = write_pair(tmp_path, rng)
    out = tmp_path / "out"
    code = main([
        "combine", "--f-shap", str(f_path), "--g-shap", str(g_path),
        "--mu-h", "auto", "--method", "squared", "--out-dir", str(out),
    ])
    assert code == 0

    mu_h = mean_product_baseline(expl_f.predictions, expl_g.predictions)
    expected = combine(expl_f, expl_g, mu_h, AlphaMethod.SQUARED)
    lib_dir = tmp_path / "lib"
    lib_dir.mkdir()
    write_shap_table(
        lib_dir / "mshap.csv",
        explanation_to_table(
            expected,
            extra_meta={
                "alpha": expected.alpha,
                "method": "squared",
                "advisory_count": 0,
                "fallback_rows": [],
            },
        ),
    )
    assert (out / "mshap.csv").read_bytes() == (lib_dir / "mshap.csv").read_bytes()
    assert (out / "mshap.meta.json").read_bytes() == (lib_dir / "mshap.meta.json").read_bytes()


def test_combine_explicit_mu_h_and_identity_part(tmp_path, rng):
    # g is the constant-1 part: zero matrix, baseline 1
    expl_f, _ = make_parts(rng, 6, 3, scale=2.0, names=NAMES)
    zeros = np.zeros((6, 3))
    from mshap import ShapExplanation

    expl_g = ShapExplanation(zeros, 1.0, np.ones(6), NAMES)
    write_shap_table(tmp_path / "f.csv", explanation_to_table(expl_f))
    write_shap_table(tmp_path / "g.csv", explanation_to_table(expl_g))
    out = tmp_path / "out"
    code = main([
        "combine", "--f-shap", str(tmp_path / "f.csv"), "--g-shap", str(tmp_path / "g.csv"),
        "--mu-h", str(expl_f.baseline), "--out-dir", str(out),
    ])
    assert code == 0
    back = read_shap_table(out / "mshap.csv")
    assert np.array_equal(back.values, expl_f.values)
    assert back.extra_meta["alpha"] == 0.0


def test_combine_single_feature_forces_product_rule(tmp_path, rng):
    expl_f, expl_g = make_parts(rng, 5, 1, scale=3.0, names=("only",))
    write_shap_table(tmp_path / "f.csv", explanation_to_table(expl_f))
    write_shap_table(tmp_path / "g.csv", explanation_to_table(expl_g))
    out = tmp_path / "out"
    assert main([
        "combine", "--f-shap", str(tmp_path / "f.csv"), "--g-shap", str(tmp_path / "g.csv"),
        "--mu-h", "auto", "--out-dir", str(out),
    ]) == 0
    back = read_shap_table(out / "mshap.csv")
    mu_h = mean_product_baseline(expl_f.predictions, expl_g.predictions)
    np.testing.assert_allclose(
        back.values[:, 0], expl_f.predictions * expl_g.predictions - mu_h, rtol=1e-12
    )


def test_combine_header_mismatch_names_column(tmp_path, rng, capsys):
    expl_f, _ = make_parts(rng, 4, 3, names=("x1", "x2", "x3"))
    _, expl_g = make_parts(rng, 4, 3, names=("x1", "zz", "x3"))
    write_shap_table(tmp_path / "f.csv", explanation_to_table(expl_f))
    write_shap_table(tmp_path / "g.csv", explanation_to_table(expl_g))
    code = main([
        "combine", "--f-shap", str(tmp_path / "f.csv"), "--g-shap", str(tmp_path / "g.csv"),
        "--mu-h", "0", "--out-dir", str(tmp_path / "out"),
    ])
    assert code == 3
    err = capsys.readouterr().err
    assert "column 1" in err and "zz" in err


def test_combine_auto_requires_prediction_columns(tmp_path, rng):
    expl_f, expl_g = make_parts(rng, 4, 2, names=("a", "b"))
    from mshap import ShapTable

    write_shap_table(tmp_path / "f.csv", ShapTable(("a", "b"), expl_f.values, expl_f.baseline))
    write_shap_table(tmp_path / "g.csv", ShapTable(("a", "b"), expl_g.values, expl_g.baseline))
    code = main([
        "combine", "--f-shap", str(tmp_path / "f.csv"), "--g-shap", str(tmp_path / "g.csv"),
        "--mu-h", "auto", "--out-dir", str(tmp_path / "out"),
    ])
    assert code == 3


def test_combine_parse_failure_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,zebra\n")
    (tmp_path / "bad.meta.json").write_text('{"baseline": 0.0}')
    code = main([
        "combine", "--f-shap", str(bad), "--g-shap", str(bad),
        "--mu-h", "0", "--out-dir", str(tmp_path / "out"),
    ])
    assert code == 3


def test_env_variable_overrides_default(tmp_path, rng, monkeypatch):
    f_path, g_path, *_ = write_pair(tmp_path, rng)
    out = tmp_path / "out"
    monkeypatch.setenv("MSHAP_METHOD", "uniform")
    assert main([
        "combine", "--f-shap", str(f_path), "--g-shap", str(g_path),
        "--mu-h", "auto", "--out-dir", str(out),
    ]) == 0
    assert read_shap_table(out / "mshap.csv").extra_meta["method"] == "uniform"


def test_flag_beats_env(tmp_path, rng, monkeypatch):
    f_path, g_path, *_ = write_pair(tmp_path, rng)
    out = tmp_path / "out"
    monkeypatch.setenv("MSHAP_METHOD", "uniform")
    assert main([
        "combine", "--f-shap", str(f_path), "--g-shap", str(g_path),
        "--mu-h", "auto", "--method", "raw", "--out-dir", str(out),
    ]) == 0
    assert read_shap_table(out / "mshap.csv").extra_meta["method"] == "raw"


def test_score_matches_library(tmp_path, rng):
    f_path, g_path, expl_f, expl_g, _ = write_pair(tmp_path, rng)
    out = tmp_path / "out"
    assert main([
        "score", "--candidate", str(f_path), "--reference", str(g_path),
        "--theta1", "2.5", "--theta2", "6", "--out-dir", str(out),
    ]) == 0
    payload = json.loads((out / "score.json").read_text())
    expected = score_matrices(expl_f.values, expl_g.values, ScoreParams(2.5, 6.0))
    for field in ("score", "direction_score", "relative_value_score", "rank_score",
                  "pct_same_sign", "pct_same_rank"):
        assert payload[field] == getattr(expected, field)


def test_score_self_is_three(tmp_path, rng):
    f_path, _, _, _, _ = write_pair(tmp_path, rng)
    out = tmp_path / "out"
    assert main(["score", "--candidate", str(f_path), "--reference", str(f_path),
                 "--out-dir", str(out)]) == 0
    assert json.loads((out / "score.json").read_text())["score"] == 3.0


def test_simulate_single_cell_and_determinism(tmp_path):
    config = {
        "scenarios": [
            {"y1": "Y1A", "y2": "Y2C", "theta1": 1.5, "theta2": 1.0,
             "n": 30, "background_size": 15, "seed": 7}
        ]
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out2)]) == 0
    body = (out1 / "results.csv").read_text()
    assert body == (out2 / "results.csv").read_text()
    lines = body.strip().splitlines()
    assert len(lines) == 5  # header + 4 methods
    assert lines[0].startswith("scenario,y1,y2,theta1")


def test_simulate_echoed_config_reproduces_run(tmp_path):
    config = {
        "grid": {"y1": ["Y1A"], "y2": ["Y2A", "Y2C"], "theta1": [1.5], "theta2": [1.0],
                 "n": 25, "background_size": 10},
        "seed": 3,
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out1)]) == 0
    assert main(["simulate", "--config", str(out1 / "resolved_config.json"),
                 "--out-dir", str(out2)]) == 0
    assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()


def test_simulate_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": {"y1": ["Y1A"]}, "typo_key": 1}))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
    cfg.write_text(json.dumps({"grid": {"y1": ["Y1A"], "bogus": 2}}))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2


def test_simulate_wrong_subcommand_config_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"subcommand": "bench"}))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2


def test_simulate_exact_reference_past_limit_exits_4(tmp_path):
    config = {
        "reference": "exact",
        "enum_limit": 4,
        "grid": {"y1": ["Y1A"], "y2": ["Y2A"], "theta1": [1.5], "theta2": [1.0],
                 "n": 20, "background_size": 10,
                 "covariates": [[-1, 1]] * 6},
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 4


def test_simulate_library_parity(tmp_path):
    from mshap import ScenarioSpec, grid_table, run_grid
    from mshap.cli import RESULT_COLUMNS, _rows_to_csv

    config = {"scenarios": [{"y1": "Y1B", "y2": "Y2D", "theta1": 2.5, "theta2": 6.0,
                             "n": 25, "background_size": 10, "seed": 5}]}
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(out)]) == 0
    spec = ScenarioSpec("Y1B", "Y2D", 2.5, 6.0, n=25, background_size=10, seed=5)
    expected = _rows_to_csv(RESULT_COLUMNS, grid_table(run_grid([spec])))
    assert (out / "results.csv").read_text() == expected


def test_bench_writes_records_and_machine_meta(tmp_path):
    config = {"p_values": [2, 3], "n_values": [10], "background_size": 10,
              "n_permutations": 5, "repetitions": 2}
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / "o"
    assert main(["bench", "--config", str(cfg), "--out-dir", str(out)]) == 0
    lines = (out / "bench.csv").read_text().strip().splitlines()
    assert lines[0] == "p,n,method,wall_seconds,per_observation_seconds,error"
    assert len(lines) == 7  # header + 3 methods x 2 p values
    meta = json.loads((out / "bench.meta.json").read_text())
    assert "machine" in meta and "python" in meta


def test_summary_data_outputs(tmp_path, rng):
    f_path, g_path, expl_f, expl_g, X = write_pair(tmp_path, rng, n=8)
    out = tmp_path / "out"
    assert main(["combine", "--f-shap", str(f_path), "--g-shap", str(g_path),
                 "--mu-h", "auto", "--out-dir", str(out)]) == 0
    write_value_table(tmp_path / "cov.csv", NAMES, X)
    assert main(["summary-data", "--mshap", str(out / "mshap.csv"),
                 "--covariates", str(tmp_path / "cov.csv"), "--out-dir", str(out)]) == 0

    importance = (out / "importance.csv").read_text().strip().splitlines()
    assert importance[0] == "feature,mean_abs_value"
    weights = [float(line.split(",")[1]) for line in importance[1:]]
    assert weights == sorted(weights, reverse=True)

    table = read_shap_table(out / "mshap.csv")
    obs = (out / "observations.csv").read_text().strip().splitlines()
    assert obs[0] == "row,feature,covariate_value,mshap_value"
    assert len(obs) == 1 + 8 * 3
    # local accuracy restated: per-row records sum (with mu_h) to the prediction
    first = [line for line in obs[1:] if line.split(",")[0] == "0"]
    total = sum(float(line.split(",")[3]) for line in first)
    assert total + table.baseline == pytest.approx(table.predictions[0], rel=1e-12)


def test_summary_data_tied_importance_ordered_by_name(tmp_path):
    from mshap import ShapTable, write_shap_table

    values = np.array([[1.0, -1.0], [-1.0, 1.0]])  # equal mean |value| per column
    write_shap_table(tmp_path / "m.csv", ShapTable(("bb", "aa"), values, 0.0))
    write_value_table(tmp_path / "cov.csv", ("bb", "aa"), np.zeros((2, 2)))
    out = tmp_path / "out"
    assert main(["summary-data", "--mshap", str(tmp_path / "m.csv"),
                 "--covariates", str(tmp_path / "cov.csv"), "--out-dir", str(out)]) == 0
    lines = (out / "importance.csv").read_text().strip().splitlines()
    assert [line.split(",")[0] for line in lines[1:]] == ["aa", "bb"]


def test_summary_data_order_matches_importance_ranks(tmp_path, rng):
    from mshap import importance_ranks

    f_path, g_path, *_ , X = write_pair(tmp_path, rng, n=10)
    out = tmp_path / "out"
    assert main(["combine", "--f-shap", str(f_path), "--g-shap", str(g_path),
                 "--mu-h", "auto", "--out-dir", str(out)]) == 0
    write_value_table(tmp_path / "cov.csv", NAMES, X)
    assert main(["summary-data", "--mshap", str(out / "mshap.csv"),
                 "--covariates", str(tmp_path / "cov.csv"), "--out-dir", str(out)]) == 0
    mean_abs = np.abs(read_shap_table(out / "mshap.csv").values).mean(axis=0)
    ranks = importance_ranks(mean_abs)
    expected_order = [NAMES[j] for j in np.argsort(ranks)]
    lines = (out / "importance.csv").read_text().strip().splitlines()
    assert [line.split(",")[0] for line in lines[1:]] == expected_order


def test_summary_data_misalignment_exits_3(tmp_path, rng):
    f_path, g_path, *_ , X = write_pair(tmp_path, rng, n=8)
    out = tmp_path / "out"
    assert main(["combine", "--f-shap", str(f_path), "--g-shap", str(g_path),
                 "--mu-h", "auto", "--out-dir", str(out)]) == 0
    write_value_table(tmp_path / "cov.csv", NAMES, X[:4])
    assert main(["summary-data", "--mshap", str(out / "mshap.csv"),
                 "--covariates", str(tmp_path / "cov.csv"), "--out-dir", str(out)]) == 3


def test_missing_required_flag_is_usage_error(tmp_path):
    assert main(["combine", "--g-shap", "g.csv", "--out-dir", str(tmp_path)]) == 2


def test_bad_method_is_usage_error(tmp_path, rng):
    f_path, g_path, *_ = write_pair(tmp_path, rng)
    assert main(["combine", "--f-shap", str(f_path), "--g-shap", str(g_path),
                 "--method", "harmonic", "--out-dir", str(tmp_path / "o")]) == 2


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2
    capsys.readouterr()


def test_console_entry_subprocess(tmp_path):
    # one end-to-end subprocess run to pin the installed entry point and exit code
    proc = subprocess.run(
        [sys.executable, "-m", "mshap", "score", "--candidate", "missing.csv",
         "--reference", "missing.csv", "--out-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 3
    assert "error:" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "mshap"], capture_output=True, text=True)
    assert proc.returncode == 2

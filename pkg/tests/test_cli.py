import json
import shlex
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from aspectra.cli import cli_main

from conftest import CHILD, make_six_variable


def run(argv, capsys):
    code = cli_main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -------------------------------------------------------------- group-vars


def test_group_vars_prints_partition(six_csv, capsys):
    code, out, _ = run(["group-vars", "--data", six_csv, "--target", "y",
                        "--cutoff", "0.6"], capsys)
    assert code == 0
    groups = json.loads(out)
    assert sorted(groups["a_b"]) == ["a", "b"]
    assert all(isinstance(v, list) for v in groups.values())


def test_group_vars_duplicate_columns(duplicate_csv, capsys):
    code, out, _ = run(["group-vars", "--data", duplicate_csv, "--cutoff", "0.99"], capsys)
    assert code == 0
    assert len(json.loads(out)) == 2  # (p, q) forced together, r alone


def test_group_vars_pearson_flag(six_csv, capsys):
    code, out, _ = run(["group-vars", "--data", six_csv, "--target", "y",
                        "--cutoff", "0.6", "--method", "pearson"], capsys)
    assert code == 0
    json.loads(out)


# ------------------------------------------------------- global-importance


def test_global_importance_tsv(six_csv, capsys):
    code, out, _ = run([
        "global-importance", "--data", six_csv, "--target", "y",
        "--model", "linear", "--cutoff", "0.6", "--B", "2", "--seed", "3",
    ], capsys)
    assert code == 0
    assert "full_model_loss" in out and "baseline_loss" in out
    body = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert body[0].startswith("group\t")


def test_global_importance_json_and_groups_file(six_csv, tmp_path, capsys):
    gfile = tmp_path / "groups.json"
    gfile.write_text(json.dumps({"ab": ["a", "b"], "rest": ["c", "d", "e", "f"]}))
    code, out, _ = run([
        "global-importance", "--data", six_csv, "--target", "y",
        "--model", "linear", "--groups", str(gfile), "--format", "json",
    ], capsys)
    assert code == 0
    doc = json.loads(out)
    assert [g["name"] for g in doc["groups"]] == ["ab", "rest"]


def test_global_importance_knn_model(six_csv, capsys):
    code, out, _ = run([
        "global-importance", "--data", six_csv, "--target", "y",
        "--model", "knn:5", "--cutoff", "0.6", "--loss", "mae",
    ], capsys)
    assert code == 0
    assert "mae" in out


def test_global_importance_subprocess_model(six_csv, capsys):
    cmd = f"{shlex.quote(sys.executable)} {shlex.quote(CHILD)} sum"
    code, out, _ = run([
        "global-importance", "--data", six_csv, "--target", "y",
        "--model", f"cmd:{cmd}", "--cutoff", "0.6",
    ], capsys)
    assert code == 0


def test_model_env_fallback(six_csv, capsys, monkeypatch):
    monkeypatch.setenv("ASPECTRA_MODEL_CMD",
                       f"{shlex.quote(sys.executable)} {shlex.quote(CHILD)} constant")
    code, out, _ = run([
        "predict-aspects", "--data", six_csv, "--target", "y",
        "--row", "0", "--cutoff", "0.6", "--N", "200",
    ], capsys)
    assert code == 0
    # constant external model: every contribution is zero
    body = [l.split("\t") for l in out.splitlines() if l and not l.startswith(("#", "aspect"))]
    assert all(float(cols[2]) == 0.0 for cols in body)


def test_no_model_no_env_is_computation_error(six_csv, capsys):
    code, _, err = run([
        "global-importance", "--data", six_csv, "--target", "y",
        "--cutoff", "0.6",
    ], capsys)
    assert code == 1
    assert "ASPECTRA_MODEL_CMD" in err


# --------------------------------------------------------- predict-aspects


def test_predict_aspects_row(six_csv, capsys):
    code, out, _ = run([
        "predict-aspects", "--data", six_csv, "--target", "y", "--model", "linear",
        "--row", "2", "--cutoff", "0.6", "--N", "500", "--seed", "1",
    ], capsys)
    assert code == 0
    assert out.splitlines()[-1].count("\t") == 4


def test_predict_aspects_obs_file(six_csv, tmp_path, capsys):
    obs = tmp_path / "obs.csv"
    obs.write_text("a,b,c,d,e,f\n0.1,0.2,0.3,0.4,0.5,0.6\n")
    code, out, _ = run([
        "predict-aspects", "--data", six_csv, "--target", "y", "--model", "linear",
        "--obs", str(obs), "--cutoff", "0.6", "--N", "500", "--format", "json",
    ], capsys)
    assert code == 0
    doc = json.loads(out)
    assert {a["name"] for a in doc["aspects"]} >= {"a_b"}


def test_predict_aspects_limit(six_csv, capsys):
    code, out, _ = run([
        "predict-aspects", "--data", six_csv, "--target", "y", "--model", "linear",
        "--row", "0", "--cutoff", "0.6", "--N", "800", "--limit", "1",
        "--format", "json",
    ], capsys)
    assert code == 0
    doc = json.loads(out)
    nonzero = [a for a in doc["aspects"] if a["contribution"] != 0.0]
    assert len(nonzero) <= 1


def test_predict_aspects_row_out_of_range(six_csv, capsys):
    code, _, err = run([
        "predict-aspects", "--data", six_csv, "--target", "y", "--model", "linear",
        "--row", "100000", "--cutoff", "0.6",
    ], capsys)
    assert code == 1
    assert "row" in err


def test_predict_aspects_obs_schema_mismatch(six_csv, tmp_path, capsys):
    obs = tmp_path / "obs.csv"
    obs.write_text("wrong,names\n1.0,2.0\n")
    code, _, err = run([
        "predict-aspects", "--data", six_csv, "--target", "y", "--model", "linear",
        "--obs", str(obs), "--cutoff", "0.6",
    ], capsys)
    assert code == 1


# ------------------------------------------------------------------ triplot


def test_triplot_global_to_file(six_csv, tmp_path, capsys):
    out_file = tmp_path / "result.json"
    code, _, _ = run([
        "triplot", "--mode", "global", "--data", six_csv, "--target", "y",
        "--model", "linear", "--B", "2", "--seed", "0", "--out", str(out_file),
    ], capsys)
    assert code == 0
    doc = json.loads(out_file.read_text())
    assert doc["mode"] == "global"
    assert len(doc["leaves"]) == 6 and len(doc["nodes"]) == 5


def test_triplot_local_stdout(six_csv, capsys):
    code, out, _ = run([
        "triplot", "--mode", "local", "--data", six_csv, "--target", "y",
        "--model", "linear", "--row", "1", "--N", "400", "--seed", "2",
    ], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["mode"] == "local"
    assert "x_star" in doc["metadata"]


def test_triplot_local_needs_observation(six_csv, capsys):
    code, _, err = run([
        "triplot", "--mode", "local", "--data", six_csv, "--target", "y",
        "--model", "linear",
    ], capsys)
    assert code == 1
    assert "--row" in err or "--obs" in err


# ------------------------------------------------------------------ render


def test_render_triplot_document(six_csv, tmp_path, capsys):
    result = tmp_path / "r.json"
    svg_file = tmp_path / "r.svg"
    assert run([
        "triplot", "--mode", "global", "--data", six_csv, "--target", "y",
        "--model", "linear", "--out", str(result),
    ], capsys)[0] == 0
    code, _, _ = run(["render", "--in", str(result), "--out", str(svg_file)], capsys)
    assert code == 0
    svg = svg_file.read_text()
    ET.fromstring(svg)
    assert svg.count('class="bar"') == 6
    assert svg.count('class="junction"') == 5


def test_render_aspects_document(six_csv, tmp_path, capsys):
    result = tmp_path / "a.json"
    svg_file = tmp_path / "a.svg"
    assert run([
        "predict-aspects", "--data", six_csv, "--target", "y", "--model", "linear",
        "--row", "0", "--cutoff", "0.6", "--N", "400", "--format", "json",
        "--out", str(result),
    ], capsys)[0] == 0
    code, _, _ = run(["render", "--in", str(result), "--out", str(svg_file)], capsys)
    assert code == 0
    ET.fromstring(svg_file.read_text())


def test_render_unknown_document(tmp_path, capsys):
    bad = tmp_path / "x.json"
    bad.write_text('{"hello": 1}')
    code, _, err = run(["render", "--in", str(bad), "--out", str(tmp_path / "x.svg")], capsys)
    assert code == 1
    assert "unrecognized" in err


# -------------------------------------------------------------- exit codes


def test_usage_error_is_exit_2(capsys):
    assert run(["group-vars"], capsys)[0] == 2  # missing required flags
    assert run(["no-such-command"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_computation_error_is_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,oops\n")
    code, _, err = run(["group-vars", "--data", str(bad), "--cutoff", "0.5"], capsys)
    assert code == 1
    assert "error:" in err


def test_help_is_exit_0(capsys):
    assert run(["--help"], capsys)[0] == 0
    assert run(["triplot", "--help"], capsys)[0] == 0


# ------------------------------------------------------------- determinism


def test_cli_determinism_same_seed(six_csv, capsys):
    argv = [
        "predict-aspects", "--data", six_csv, "--target", "y", "--model", "linear",
        "--row", "0", "--cutoff", "0.6", "--N", "500", "--seed", "42",
    ]
    out1 = run(argv, capsys)[1]
    out2 = run(argv, capsys)[1]
    assert out1 == out2


def test_installed_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "aspectra.cli", "--help"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert "group-vars" in proc.stdout

"""Command-line behaviour: outputs, routing, and exit codes."""

import json
import subprocess
import sys

import pytest

from rigclust.cli import EXIT_BUDGET, EXIT_DATA, EXIT_OK, EXIT_USAGE, main


BASE = ["--n", "200", "--m", "200", "--beta", "1",
        "--x-law", "pareto(1,7)", "--y-law", "pareto(1,6)"]


def run_main(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# theory
# ---------------------------------------------------------------------------

def test_theory_writes_csv(tmp_path, capsys):
    out = tmp_path / "theory.csv"
    code, _, err = run_main(
        ["theory", *BASE, "--k-min", "2", "--k-max", "6", "--out", str(out)],
        capsys)
    assert code == EXIT_OK and err == ""
    header, *lines = out.read_text().strip().split("\n")
    assert header == "k,a,b,A_lo,A_hi,B_lo,B_hi,c_pred,C_pred_lo,C_pred_hi"
    assert [line.split(",")[0] for line in lines] == ["2", "3", "4", "5", "6"]
    assert all(float(line.split(",")[7]) > 0 for line in lines)


def test_theory_stdout_and_negative_exponent_note(capsys):
    code, out, err = run_main(
        ["theory", "--n", "50", "--m", "50", "--beta", "1",
         "--x-law", "pareto(1,6)", "--y-law", "pareto(1,6.5)",
         "--k-max", "4"], capsys)
    assert code == EXIT_OK
    assert out.startswith("k,a,b,")
    assert "negative" in err


def test_theory_reads_config_file_with_flag_overrides(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n = 50\nm = 50\nbeta = 1\n"
                   "x_law = pareto(1,7)\ny_law = pareto(1,6)\nk_max = 9\n")
    code, out, _ = run_main(
        ["theory", "--config", str(cfg), "--k-max", "3"], capsys)
    assert code == EXIT_OK
    assert [line.split(",")[0] for line in out.strip().split("\n")] == ["k", "2", "3"]


# ---------------------------------------------------------------------------
# simulate / compare
# ---------------------------------------------------------------------------

def test_simulate_writes_pooled_spectrum(tmp_path, capsys):
    out = tmp_path / "pooled.csv"
    code, _, err = run_main(
        ["simulate", *BASE, "--replicates", "2", "--out", str(out)], capsys)
    assert code == EXIT_OK and err == ""
    assert out.read_text().startswith("k,n_vertices,tri_sum,cherry_sum,")


def test_simulate_stdout_default(capsys):
    code, out, _ = run_main(
        ["simulate", "--n", "80", "--m", "80", "--beta", "1",
         "--x-law", "degenerate(1.2)", "--y-law", "degenerate(0.9)"], capsys)
    assert code == EXIT_OK
    assert out.startswith("k,n_vertices,")


def test_compare_requires_output_dir(capsys):
    code, _, err = run_main(["compare", *BASE], capsys)
    assert code == EXIT_USAGE
    assert "output-dir" in err


def test_compare_writes_report_and_summary(tmp_path, capsys):
    out = tmp_path / "cmp"
    code, stdout, _ = run_main(
        ["compare", *BASE, "--replicates", "2", "--k-max", "10",
         "--output-dir", str(out)], capsys)
    assert code == EXIT_OK
    assert stdout.startswith("config ")
    assert "2/2 replicates" in stdout
    meta = json.loads((out / "report.json").read_text())
    assert stdout.startswith(f"config {meta['config_hash'][:12]}")
    assert (out / "report.csv").exists() and (out / "runinfo.json").exists()


def test_budget_abort_exit_code(tmp_path, capsys):
    code, _, err = run_main(
        ["compare", *BASE, "--edge-budget", "1",
         "--output-dir", str(tmp_path / "x")], capsys)
    assert code == EXIT_BUDGET
    assert "budget" in err


# ---------------------------------------------------------------------------
# fit-delta / stats
# ---------------------------------------------------------------------------

def test_fit_delta_reads_csv(tmp_path, capsys):
    path = tmp_path / "curve.csv"
    rows = "\n".join(f"{k},{2.0 * k ** -1.5!r}" for k in range(2, 30))
    path.write_text("k,value\n" + rows + "\n")
    code, out, _ = run_main(
        ["fit-delta", str(path), "--window", "4", "25"], capsys)
    assert code == EXIT_OK
    fields = dict(part.split("=") for part in out.split())
    assert float(fields["slope"]) == pytest.approx(-1.5, abs=1e-12)
    assert float(fields["r_squared"]) == pytest.approx(1.0, abs=1e-12)


def test_fit_delta_named_columns_and_blank_cells(tmp_path, capsys):
    path = tmp_path / "curve.csv"
    path.write_text("k,foo,val\n2,x,8.0\n3,x,\n4,x,2.0\n8,x,1.0\n16,x,0.5\n")
    code, out, _ = run_main(
        ["fit-delta", str(path), "--window", "2", "16",
         "--k-col", "k", "--value-col", "val"], capsys)
    assert code == EXIT_OK and "slope=" in out


@pytest.mark.parametrize("content,match", [
    ("", "empty"),
    ("a,b\n1,2\n", "no columns"),
    ("k,value\n1,x\n2,1\n3,1\n4,1\n", "non-numeric"),
    ("k,value\n1,1\n2,1\n", "at least 3"),
])
def test_fit_delta_data_errors(tmp_path, capsys, content, match):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    argv = ["fit-delta", str(path), "--window", "1", "100"]
    if match == "no columns":
        argv += ["--k-col", "k", "--value-col", "value"]
    code, _, err = run_main(argv, capsys)
    assert code == EXIT_DATA
    assert match in err


def test_fit_delta_missing_file(tmp_path, capsys):
    code, _, err = run_main(
        ["fit-delta", str(tmp_path / "nope.csv"), "--window", "1", "9"], capsys)
    assert code == EXIT_DATA
    assert "cannot read" in err


def test_stats_prints_spectrum(tmp_path, capsys):
    path = tmp_path / "edges.txt"
    path.write_text("0 1\n0 2\n1 2\n0 3\n")
    code, out, _ = run_main(["stats", "--edges", str(path)], capsys)
    assert code == EXIT_OK
    assert "3,1,1,3,0.3333333333333333" in out


def test_stats_malformed_edges(tmp_path, capsys):
    path = tmp_path / "edges.txt"
    path.write_text("0 1\noops\n")
    code, _, err = run_main(["stats", "--edges", str(path)], capsys)
    assert code == EXIT_DATA
    assert "line 2" in err


def test_stats_missing_file(tmp_path, capsys):
    code, _, err = run_main(
        ["stats", "--edges", str(tmp_path / "nope.txt")], capsys)
    assert code == EXIT_DATA
    assert "cannot read" in err and "Traceback" not in err


# ---------------------------------------------------------------------------
# Usage errors and the module entry point
# ---------------------------------------------------------------------------

def test_usage_errors_exit_one(capsys):
    assert run_main(["theory", "--n", "50"], capsys)[0] == EXIT_USAGE  # missing keys
    assert run_main(["theory", *BASE, "--bogus"], capsys)[0] == EXIT_USAGE
    assert run_main(["theory", *BASE, "--generator", "magic"], capsys)[0] == EXIT_USAGE
    code, _, err = run_main(
        ["theory", "--config", "/nonexistent/exp.cfg"], capsys)
    assert code == EXIT_USAGE and "cannot read config" in err


def test_module_entry_point(tmp_path):
    out = tmp_path / "t.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "rigclust", "theory", *BASE,
         "--k-max", "4", "--out", str(out)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().startswith("k,a,b,")

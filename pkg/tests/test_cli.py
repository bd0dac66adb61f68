import csv
import subprocess
import sys

import pytest

from compressive_rate.cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main

SMALL = """
[simulation]
N = 6
trials = 2
master_seed = 5
M_grid = [3, 6]
P_grid = [10.0]

[channel]
model = "group"
group_sizes = [3, 3]
"""


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_writes_csv(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL)
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = _read(out)
    assert len(rows) == 2 * 2 * 2
    assert {r["estimator"] for r in rows} == {"linear-pinv", "nonlinear-bpdn"}


def test_simulate_json(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL)
    out = tmp_path / "o.json"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--format", "json"]) == EXIT_OK
    assert out.read_text().startswith("[")


def test_simulate_config_errors(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL + "\n[extra]\nx = 1\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == EXIT_CONFIG
    assert main(["simulate", "--config", str(tmp_path / "missing.toml"), "--out", "x"]) == EXIT_CONFIG
    cfg.write_text(SMALL)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o.csv"), "--workers", "0"]) == EXIT_CONFIG


def test_failure_budget_exit_code(tmp_path):
    # a tight iteration cap on a tall noiseless problem cannot certify anything
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL.replace("P_grid = [10.0]", "P_grid = [10.0]\nfailure_budget = 0.0")
                   + '\n[noise]\nkind = "scalar-quantizer"\nstep = 0.5\n\n[solver]\nmax_iters = 1\n')
    code = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o.csv")])
    assert code == EXIT_FAILURE


def test_bounds_subcommand(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bounds", "--k", "10", "--eps", "0.9", "--n-min", "100", "--n-max", "100000",
                 "--num", "11", "--out", str(out)]) == EXIT_OK
    rows = _read(out)
    ratios = [float(r["M_over_N"]) for r in rows]
    assert all(a >= b for a, b in zip(ratios, ratios[1:]))
    assert main(["bounds", "--delta", "1.5", "--out", str(out)]) == EXIT_CONFIG


def test_recover_subcommand(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["recover", "--n", "20", "--k-grid", "1,3", "--m-grid", "10,20", "--trials", "3",
                 "--out", str(out)]) == EXIT_OK
    rows = _read(out)
    assert [(r["M"], r["k"]) for r in rows] == [("10", "1"), ("10", "3"), ("20", "1"), ("20", "3")]


def test_bad_list_argument():
    with pytest.raises(SystemExit):
        main(["recover", "--n", "20", "--k-grid", "a,b", "--m-grid", "10", "--trials", "1", "--out", "x"])


def test_selftest_subcommand(capsys):
    assert main(["selftest"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_module_entry_point(tmp_path):
    out = tmp_path / "b.csv"
    proc = subprocess.run([sys.executable, "-m", "compressive_rate", "bounds", "--n-min", "100",
                           "--n-max", "1000", "--num", "3", "--out", str(out)], capture_output=True)
    assert proc.returncode == 0 and out.exists()

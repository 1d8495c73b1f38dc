import json
import hashlib
import subprocess
import sys
from pathlib import Path

import pytest

from cookiewalk import __version__
from cookiewalk.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def cfg(name):
    return str(CONFIGS / name)


def test_validate_ok(capsys):
    assert main(["validate", cfg("z_one_cookie.json")]) == 0
    assert "mean_delta=0.5" in capsys.readouterr().out
    assert main(["validate", cfg("z_delta_family.json")]) == 0


def test_validate_names_offending_cookie(capsys):
    assert main(["validate", cfg("bad_env.json")]) == 2
    err = capsys.readouterr().err
    assert "prefix[1]" in err and "drift" in err


def test_oracle_prints_probability(capsys):
    assert main(["oracle", "--instance", cfg("window_fair.json")]) == 0
    assert capsys.readouterr().out.strip() == "0.5"
    assert main(["oracle", "--instance", cfg("window_one_cookie.json"), "--drift",
                 "--depth", "10"]) == 0
    lines = capsys.readouterr().out.split("\n")
    assert float(lines[0]) == pytest.approx(0.78125) and float(lines[1]) == pytest.approx(1.125)
    assert len(lines[2].split()) == 3


def test_input_errors_exit_2(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2
    assert "error[" in capsys.readouterr().err
    assert main(["oracle", "--instance", cfg("window_fair.json"), "--depth", "99"]) == 2
    assert main(["classify", cfg("z_one_cookie.json")]) == 2  # --seed is required
    near = tmp_path / "near.json"
    near.write_text(json.dumps({
        "lattice": {"kind": "Zd", "dim": 1}, "kappa": 0.25,
        "support": [{"prefix": [[0.75, 0.25], [0.75, 0.25]], "tail": [0.5, 0.5]}]}))
    assert main(["classify", str(near), "--seed", "1", "--horizon", "100",
                 "--replicas", "2"]) == 2
    assert "threshold" in capsys.readouterr().err


def test_simulate_to_stdout(capsys):
    assert main(["simulate", cfg("z_one_cookie.json"), "--seed", "3", "--replicas", "4",
                 "--horizon", "50"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 5 and lines[0].startswith("replica,env_seed")


def test_manifest_written(tmp_path):
    out = tmp_path / "m.csv"
    argv = ["martingale-test", cfg("bw_erw_2d.json"), "--seed", "2", "--replicas", "200",
            "--n-list", "10,100", "--out", str(out)]
    assert main(argv) == 0
    meta = json.loads((tmp_path / "m.csv.manifest.json").read_text())
    assert meta["seed"] == 2 and meta["version"] == __version__
    assert meta["argv"] == argv and meta["command"] == "martingale-test"
    assert meta["mixer"] == "splitmix64-chain/v1"
    assert meta["csv_sha256"] == hashlib.sha256(out.read_bytes()).hexdigest()
    header = out.read_text().split("\n")[0]
    assert header == "n,mean,std_error,ci_low,ci_high,replicas,z,pass"


def test_misindex_control_exits_1(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code = main(["martingale-test", cfg("z_one_cookie.json"), "--seed", "3", "--replicas",
                 "2000", "--n-list", "100,1000", "--env-seed", "11", "--misindex",
                 "--out", str(out)])
    assert code == 1
    assert "false" in out.read_text()


def test_beatus_command(capsys):
    assert main(["beatus-check", cfg("z_one_cookie.json"), "--seed", "4", "--replicas", "300",
                 "--x-list", "1,3", "--budget", "100000", "--env-seed", "2"]) == 0
    rows = capsys.readouterr().out.strip().split("\n")
    assert rows[0].startswith("x,bound") and len(rows) == 3


def test_sweep_output_independent_of_jobs(tmp_path):
    texts = []
    for jobs in (1, 4):
        out = tmp_path / f"s{jobs}.csv"
        assert main(["sweep", "--family", cfg("z_delta_family.json"), "--grid", "0.25,1.0,2",
                     "--seed", "9", "--replicas", "20", "--horizon", "5000",
                     "--jobs", str(jobs), "--out", str(out)]) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    rows = texts[0].decode().strip().split("\n")
    assert len(rows) == 4 and "near-critical" in rows[2]


def test_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "cookiewalk.cli", "oracle", "--instance",
                           cfg("window_fair.json")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "0.5"

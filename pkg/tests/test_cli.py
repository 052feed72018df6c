import json
import subprocess
import sys

import pytest

from dpbench.cli import EXIT_ERROR, EXIT_OK, EXIT_TASK_FAILED, main
from dpbench.io import read_json, read_params_json, read_trajectory_csv
from dpbench.policy import load_policy


def run(*argv):
    return main([str(a) for a in argv])


def test_simulate_baseline_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("simulate", "--out", a) == EXIT_OK
    assert run("simulate", "--out", b) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    report = read_json(tmp_path / "a.json")
    assert report["success"] is True and 0 < report["score"] < 1
    assert len(read_trajectory_csv(a)) == 5001


def test_simulate_zero_controller_reports_task_failure(tmp_path):
    assert run("simulate", "--controller", "zero", "--out", tmp_path / "z.csv") == EXIT_TASK_FAILED
    assert read_json(tmp_path / "z.json")["score"] == 0.0


def test_simulate_with_imperfections(tmp_path):
    code = run(
        "simulate", "--out", tmp_path / "p.csv", "--perturb", "--vel-noise", "0.05", "--delay", "0.004", "--seed", "3"
    )
    assert code in (EXIT_OK, EXIT_TASK_FAILED)
    traj = read_trajectory_csv(tmp_path / "p.csv")
    assert abs(traj.tau_pert).max() > 0


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--bogus"],
        ["simulate", "--robot", "cartpole"],
        ["nocommand"],
        ["simulate", "--controller", "policy"],
        ["simulate", "--model", "/nonexistent/params.json"],
        ["simulate", "--k-resp", "0"],
        ["plotdata", "--traj", "/nonexistent.csv", "--out", "x.csv"],
    ],
)
def test_errors_exit_one(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_ERROR


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"t_final": 2.0, "robot": "acrobot"}))
    run("simulate", "--config", cfg, "--robot", "pendubot", "--out", tmp_path / "t.csv")
    traj = read_trajectory_csv(tmp_path / "t.csv")
    assert traj.t_final == pytest.approx(2.0)
    cfg.write_text(json.dumps({"unknown": 1}))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "u.csv") == EXIT_ERROR


def test_malformed_trajectory_exits_one(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,trajectory\n")
    assert run("plotdata", "--traj", bad, "--out", tmp_path / "o.csv") == EXIT_ERROR


def test_plotdata(tmp_path):
    run("simulate", "--out", tmp_path / "t.csv", "--t-final", "1")
    assert run("plotdata", "--traj", tmp_path / "t.csv", "--out", tmp_path / "plot.csv") == EXIT_OK
    header = (tmp_path / "plot.csv").read_text().splitlines()[0]
    assert header == "time,pos1,pos2,vel1,vel2,tau1,tau2,tau_pert1,tau_pert2"


def test_evaluate_and_leaderboard(tmp_path, capsys):
    rows = tmp_path / "rows"
    assert run("evaluate", "--trials", "2", "--out", rows / "baseline.json") == EXIT_OK
    assert run("evaluate", "--trials", "2", "--controller", "zero", "--out", rows / "zero.json") == EXIT_TASK_FAILED
    capsys.readouterr()
    assert run("leaderboard", "--rows", rows, "--md", tmp_path / "b.md", "--csv", tmp_path / "b.csv") == EXIT_OK
    table = capsys.readouterr().out.splitlines()
    assert "| 1 | baseline |" in table[2] and "| 2 | zero |" in table[3]
    assert (tmp_path / "b.md").read_text().splitlines() == table
    assert run("leaderboard", "--rows", tmp_path / "empty") == EXIT_ERROR


def test_evaluate_parallel_output_identical(tmp_path):
    run("evaluate", "--trials", "3", "--seed", "7", "--out", tmp_path / "a.json")
    run("evaluate", "--trials", "3", "--seed", "7", "--n-jobs", "2", "--out", tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_robustness_with_small_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    sweep = {c: [0.0, 0.0, 1] for c in ("vel_noise", "tau_noise", "delay")}
    sweep.update({"model": [1.0, 1.0, 1], "tau_resp": [1.0, 1.0, 1]})
    cfg.write_text(json.dumps({"sweep": sweep, "t_final": 10.0}))
    code = run("robustness", "--config", cfg, "--out", tmp_path / "r.json", "--points", tmp_path / "p.csv")
    assert code == EXIT_OK
    doc = read_json(tmp_path / "r.json")
    assert doc["n_rollouts"] == 10 + 4 + 50
    for key in ("c_m", "c_v_noise", "c_tau_noise", "c_tau_resp", "c_d"):
        assert doc[key] == 1.0
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 65


def test_sysid_generate_and_identify(tmp_path, capsys):
    code = run(
        "sysid", "--data", tmp_path / "data", "--generate", "2", "--generations", "60",
        "--out", tmp_path / "p.json", "--progress", tmp_path / "prog.csv",
    )
    assert code == EXIT_OK
    assert len(list((tmp_path / "data").glob("*.csv"))) == 2
    doc = json.loads(capsys.readouterr().out)
    assert doc["nominal_cost"] == 0.0
    assert read_params_json(tmp_path / "p.json").m1 > 0
    lines = (tmp_path / "prog.csv").read_text().splitlines()
    assert len(lines) == 62  # header, initial population, 60 generations
    best = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(b1 <= b0 for b0, b1 in zip(best, best[1:]))
    assert doc["cost"] == best[-1] < best[0]
    assert run("sysid", "--data", tmp_path / "missing") == EXIT_ERROR
    assert run("sysid", "--data", tmp_path / "data", "--free", "m7") == EXIT_ERROR


def test_train_writes_policy(tmp_path, capsys):
    code = run(
        "train", "--no-pretrain", "--generations", "2", "--popsize", "4", "--hidden", "4", "--t-final", "1",
        "--out", tmp_path / "pol.bin", "--progress", tmp_path / "prog.csv",
    )
    assert code in (EXIT_OK, EXIT_TASK_FAILED)
    policy = load_policy(tmp_path / "pol.bin")
    assert policy.layer_sizes[1] == 4
    assert len((tmp_path / "prog.csv").read_text().splitlines()) == 3
    doc = json.loads(capsys.readouterr().out)
    assert doc["policy"] == str(tmp_path / "pol.bin")


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "dpbench.cli", "simulate", "--t-final", "0.5", "--out", str(tmp_path / "s.csv")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_TASK_FAILED
    assert json.loads(proc.stdout)["success"] is False

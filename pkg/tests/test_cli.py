import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np

from polydyn.cli import _SUITES, main

SPECS = Path(__file__).resolve().parent.parent / "scripts" / "specs"


def run_to_file(tmp_path, name, argv):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out.read_bytes()


def test_counter_run_emits_the_cycle(tmp_path):
    code, data = run_to_file(tmp_path, "c.csv", ["run", "--spec", str(SPECS / "counter.json")])
    assert code == 0
    lines = data.decode().strip().split("\n")
    assert lines[0] == "t,output"
    assert [l.split(",")[1] for l in lines[1:]] == ["0", "1", "2", "3", "4", "5", "0"]


def test_markov_exact_rows_match_matrix_powers(tmp_path):
    code, data = run_to_file(tmp_path, "m.csv", ["run", "--spec", str(SPECS / "markov.json")])
    assert code == 0
    lines = data.decode().strip().split("\n")
    assert lines[0] == "t,p_up,p_down"
    k = np.array([[0.9, 0.1], [0.2, 0.8]])
    for t, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert int(cells[0]) == t
        want = np.linalg.matrix_power(k, t)[0]
        assert abs(float(cells[1]) - want[0]) <= 1e-12
        assert abs(float(cells[2]) - want[1]) <= 1e-12
    # the two-step row, digit for digit
    assert lines[3] == "2,0.8300000000000001,0.17000000000000004"


def test_exact_runs_are_byte_identical(tmp_path):
    for spec in ("counter.json", "markov.json"):
        argv = ["run", "--spec", str(SPECS / spec)]
        _, a = run_to_file(tmp_path, "a.csv", argv)
        _, b = run_to_file(tmp_path, "b.csv", argv)
        assert a == b


def test_sampled_runs_are_seed_deterministic(tmp_path):
    spec = json.loads((SPECS / "markov.json").read_text())
    spec["mode"] = "sample"
    path = tmp_path / "sample.json"
    path.write_text(json.dumps(spec))
    argv = ["run", "--spec", str(path), "--horizon", "30"]
    code, a = run_to_file(tmp_path, "a.csv", argv + ["--seed", "7"])
    assert code == 0
    _, b = run_to_file(tmp_path, "b.csv", argv + ["--seed", "7"])
    _, c = run_to_file(tmp_path, "c.csv", argv + ["--seed", "8"])
    assert a == b
    assert a != c
    assert len(a.decode().strip().split("\n")) == 32


def test_every_check_suite_passes(tmp_path):
    for suite in _SUITES:
        code, data = run_to_file(tmp_path, f"{suite}.json", ["check", "--suite", suite])
        report = json.loads(data)
        assert code == 0, report
        assert report["pass"] is True
        assert report["suite"] == suite


def test_perturbed_inversion_fails_the_bayes_suite(tmp_path):
    spec = {
        "labels_x": ["x1", "x2"],
        "labels_y": ["y1", "y2"],
        "prior": [["x1", 0.25], ["x2", 0.75]],
        "channel": [
            ["x1", [["y1", 0.9], ["y2", 0.1]]],
            ["x2", [["y1", 0.3], ["y2", 0.7]]],
        ],
        "perturb": 0.05,
    }
    path = tmp_path / "warped.json"
    path.write_text(json.dumps(spec))
    code, data = run_to_file(
        tmp_path, "report.json", ["check", "--suite", "bayes", "--spec", str(path)]
    )
    report = json.loads(data)
    assert code == 1
    assert report["pass"] is False
    assert report["checks"][0]["witness"] is not None


def test_usage_errors_exit_two(tmp_path, capsys):
    assert main(["check", "--suite", "nonsense"]) == 2
    assert main(["run"]) == 2
    assert main(["check"]) == 2
    assert main(["laplace"]) == 2
    assert main(["run", "--spec", str(tmp_path / "missing.json")]) == 2
    capsys.readouterr()


def test_laplace_csv_descends_to_the_posterior(tmp_path):
    argv = ["laplace", "--spec", str(SPECS / "laplace1d.json")]
    code, data = run_to_file(tmp_path, "l.csv", argv)
    assert code == 0
    lines = data.decode().strip().split("\n")
    assert lines[0] == "step,level,mean_0,free_energy"
    assert abs(float(lines[-1].split(",")[2]) - 0.4) <= 1e-6
    fes = [float(l.split(",")[-1]) for l in lines[1:]]
    assert all(b <= a + 1e-12 for a, b in zip(fes, fes[1:]))
    _, again = run_to_file(tmp_path, "l2.csv", argv)
    assert again == data


def test_two_level_laplace_csv(tmp_path):
    code, data = run_to_file(
        tmp_path, "l2.csv", ["laplace", "--spec", str(SPECS / "laplace2level.json")]
    )
    assert code == 0
    last_rows = data.decode().strip().split("\n")[-2:]
    m0 = float(last_rows[0].split(",")[2])
    m1 = float(last_rows[1].split(",")[2])
    assert abs(m0 - 4.0 / 7.0) <= 1e-4
    assert abs(m1 - 10.0 / 7.0) <= 1e-4


def test_demo_is_seed_deterministic(tmp_path):
    argv = ["demo", "--spec", str(SPECS / "ou.json")]
    code, a = run_to_file(tmp_path, "a.csv", argv + ["--seed", "3"])
    assert code == 0
    _, b = run_to_file(tmp_path, "b.csv", argv + ["--seed", "3"])
    _, c = run_to_file(tmp_path, "c.csv", argv + ["--seed", "4"])
    assert a == b
    assert a != c
    lines = a.decode().strip().split("\n")
    assert lines[0] == "t,x"
    assert len(lines) == 1002


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "polydyn", "check", "--suite", "comonoid"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["pass"] is True
    assert shutil.which("polydyn") is not None

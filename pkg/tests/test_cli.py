import os

import numpy as np
import pytest

from dualtraj.cli import main
from dualtraj.discretize import read_trajectory_csv
from dualtraj.model import registry, save_system_file


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_integrate_logistic_smoke(tmp_path, capsys):
    code, out, _ = run(capsys, "integrate", "--system", "logistic",
                       "--method", "rk45", "--n", "10", "--out", str(tmp_path))
    assert code == 0
    csv_path = tmp_path / "logistic_rk45.csv"
    assert csv_path.exists()
    ts, X = read_trajectory_csv(csv_path)
    assert ts.shape == (11,)
    assert "objective P" in out


def test_integrate_full_logistic_objective_scale(tmp_path, capsys):
    code, out, _ = run(capsys, "integrate", "--system", "logistic",
                       "--out", str(tmp_path))
    assert code == 0
    ts, X = read_trajectory_csv(tmp_path / "logistic_rk45.csv")
    assert ts.shape == (1001,)
    p_line = [ln for ln in out.splitlines() if ln.startswith("objective P")][0]
    assert float(p_line.split("=")[1]) <= 1e-8


def test_integrate_unknown_system(tmp_path, capsys):
    code, _, err = run(capsys, "integrate", "--system", "pendulum",
                       "--out", str(tmp_path))
    assert code == 1
    assert "pendulum" in err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["integrate", "--bogus"])
    assert exc.value.code == 1


def test_solve_levmarq_logistic(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--system", "logistic",
                       "--method", "levmarq", "--start", "zero",
                       "--out", str(tmp_path))
    assert code == 0
    assert "certificate = global-minimum" in out
    report = (tmp_path / "logistic_solve.txt").read_text()
    assert "verdict = global-minimum" in report
    assert (tmp_path / "logistic_solve.csv").exists()


def test_solve_plot_emission(tmp_path, capsys):
    code, _, _ = run(capsys, "solve", "--system", "logistic", "--n", "50",
                     "--method", "levmarq", "--plot", "--out", str(tmp_path))
    assert code == 0
    svg = (tmp_path / "logistic_solve.svg").read_text()
    assert svg.lstrip().startswith("<?xml")


def test_solve_exit_code_on_budget(tmp_path, capsys):
    code, _, _ = run(capsys, "solve", "--system", "memristor", "--n", "60",
                     "--T", "6", "--method", "levmarq", "--max-iter", "1",
                     "--y0", "0.5,0.5", "--out", str(tmp_path))
    assert code == 2


def test_classify_all(tmp_path, capsys):
    expected = {"logistic": "pd-attainable", "memristor": "boundary-only",
                "lorenz": "indefinite-only"}
    for name, kind in expected.items():
        code, out, _ = run(capsys, "classify", "--system", name,
                           "--budget", "5000", "--out", str(tmp_path))
        assert code == 0
        assert kind in out
        assert "prognosis" in out


def test_classify_samples_csv(tmp_path, capsys):
    path = tmp_path / "samples.csv"
    code, _, _ = run(capsys, "classify", "--system", "lorenz",
                     "--budget", "1000", "--samples-csv", str(path),
                     "--out", str(tmp_path))
    assert code == 0
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[1] == 6


def test_system_file_roundtrip_through_cli(tmp_path, capsys):
    spec = registry("logistic", {"n": 40})
    path = tmp_path / "sys.txt"
    save_system_file(path, spec)
    code, out, _ = run(capsys, "solve", "--system", str(path),
                       "--method", "levmarq", "--out", str(tmp_path))
    assert code == 0
    assert "global-minimum" in out


def test_param_rejected_for_file_systems(tmp_path, capsys):
    spec = registry("logistic", {"n": 20})
    path = tmp_path / "sys.txt"
    save_system_file(path, spec)
    code, _, err = run(capsys, "solve", "--system", str(path),
                       "--param", "r=3", "--out", str(tmp_path))
    assert code == 1
    assert "registry" in err


def test_compare_logistic(tmp_path, capsys):
    code, out, _ = run(capsys, "compare", "--system", "logistic",
                       "--out", str(tmp_path))
    assert code == 0
    assert "winner = cd" in out
    report = (tmp_path / "logistic_compare.txt").read_text()
    p45 = float([ln for ln in report.splitlines()
                 if ln.startswith("P_rk45")][0].split("=")[1])
    pcd = float([ln for ln in report.splitlines()
                 if ln.startswith("P_cd")][0].split("=")[1])
    assert p45 <= 1e-8 and pcd <= 1e-8 and pcd <= p45
    for stem in ("logistic_rk45", "logistic_rk23", "logistic_cd",
                 "logistic_separation", "logistic_compare"):
        assert any(f.startswith(stem) for f in os.listdir(tmp_path))
    assert (tmp_path / "logistic_compare.svg").exists()
    assert (tmp_path / "logistic_separation.svg").exists()


def test_compare_memristor_small_grid(tmp_path, capsys):
    code, out, _ = run(capsys, "compare", "--system", "memristor",
                       "--n", "2000", "--T", "50", "--out", str(tmp_path))
    assert code == 0
    assert "classification = boundary-only" in out
    assert "winner = cd" in out

import json
import subprocess
import sys

import numpy as np
import pytest

from tailcalc.cli import CliError, grid_points, main, parse_fixture
from tailcalc.gridfn import GridFunction, build_grid_function, symmetric_grid
from tailcalc.oracle import DistributionModel


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_conjugate_csv_round_trip(tmp_path, capsys):
    f = build_grid_function("quadratic", symmetric_grid(8, 161))
    src = tmp_path / "f.csv"
    src.write_text(f.to_csv())
    code, out, _ = run(capsys, "conjugate", "--input", str(src), "--dual-min", "-2", "--dual-max", "2", "--points", "41")
    assert code == 0
    g = GridFunction.from_csv(out)
    assert np.allclose(g.values, g.grid**2 / 2, atol=1e-12)


def test_conjugate_json_output(tmp_path, capsys):
    dest = tmp_path / "g.json"
    code, _, _ = run(capsys, "conjugate", "--fn", "abs", "--format", "json", "--out", str(dest), "--points", "21")
    assert code == 0
    g = GridFunction.from_json(dest.read_text())
    inside = np.abs(g.grid) <= 1
    assert np.allclose(g.values[inside], 0.0)


def test_mom2tail_psi_one(capsys):
    code, out, _ = run(capsys, "mom2tail", "--psi", "psi_one", "--ymin", "3", "--ymax", "30", "--points", "5")
    assert code == 0
    rows = np.array([[float(v) for v in line.split(",")] for line in out.strip().splitlines()[1:]])
    assert np.allclose(rows[:, 1], rows[:, 0] / np.e, rtol=1e-4)


@pytest.mark.parametrize(
    "argv",
    [
        ["tail2mom", "--zeta", "powerlog", "--beta", "1"],
        ["mom2mgf", "--delta", "zero"],
        ["verify", "--conversion", "mgf", "--fixture", "log_weibull", "--seed", "1", "--n", "1000"],
        ["fixtures", "--fixture", "laplace"],
        ["verify", "--conversion", "chernov", "--fixture", "gaussian"],
        ["bphi-norm", "--fixture", "nosuch"],
    ],
)
def test_validation_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("error:")


def test_delta_failure_message_names_condition(capsys):
    _, _, err = run(capsys, "mom2mgf", "--delta", "zero")
    assert "(Δ)" in err


def test_verify_chernov_gaussian_dominates(capsys):
    code, out, _ = run(
        capsys, "verify", "--conversion", "chernov", "--fixture", "gaussian", "--seed", "5", "--n", "20000", "--nprobes", "4"
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["dominates"] is True


def test_fixture_sampling_is_seeded(capsys):
    _, a, _ = run(capsys, "fixtures", "--fixture", "laplace", "--seed", "3", "--n", "5")
    _, b, _ = run(capsys, "fixtures", "--fixture", "laplace", "--seed", "3", "--n", "5")
    assert a == b
    vals = np.array([float(v) for v in a.strip().splitlines()[1:]])
    assert np.array_equal(vals, DistributionModel.laplace().sample(5, 3))


def test_fixture_listing(capsys):
    code, out, _ = run(capsys, "fixtures")
    assert code == 0 and "pareto_unit" in out and "laplace_pair" in out


def test_grid_points_env_override(monkeypatch):
    monkeypatch.setenv("TAILCALC_GRID_POINTS", "77")
    assert grid_points(1001) == 77
    monkeypatch.setenv("TAILCALC_GRID_POINTS", "x")
    with pytest.raises(CliError):
        grid_points(1001)
    monkeypatch.delenv("TAILCALC_GRID_POINTS")
    assert grid_points(1001) == 1001


def test_parse_fixture_forms(tmp_path):
    assert parse_fixture("gaussian:sigma=2") == DistributionModel.gaussian(2.0)
    m = DistributionModel.pareto_unit(0.25)
    assert parse_fixture(m.to_json()) == m
    path = tmp_path / "m.json"
    path.write_text(m.to_json())
    assert parse_fixture(str(path)) == m
    with pytest.raises(CliError):
        parse_fixture("cauchy")


def test_nd_chernov(capsys):
    code, out, _ = run(capsys, "nd", "--fixture", "gaussian_diag14", "--op", "chernov", "--x", "1", "2", "--points", "121")
    assert code == 0
    bound = json.loads(out)["bound"]
    # a coarser lambda-grid can only loosen the bound
    assert np.exp(-1.0) <= bound <= 1.01 * np.exp(-1.0)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tailcalc", "fixtures"], capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and "gaussian" in res.stdout

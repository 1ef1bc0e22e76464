import pytest

from hdg_interface.cli import EXIT_ALIGNMENT, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, RunConfig, main
from hdg_interface.errors import InvalidParam


def parse_summary(text):
    out = {}
    for line in text.splitlines():
        if ":" in line:
            k, v = line.split(":", 1)
            out[k.strip()] = v.strip()
    return out


def test_solve_patch(capsys):
    assert main(["solve", "--preset", "patch", "--n", "4"]) == EXIT_OK
    s = parse_summary(capsys.readouterr().out)
    assert float(s["e_h"]) <= 1e-10 and float(s["E_h"]) <= 1e-10
    assert int(s["condensed_dofs"]) < int(s["full_dofs"])
    assert float(s["residual"]) <= 1e-10


def test_solve_example1_magnitude(capsys):
    assert main(["solve", "--preset", "example1", "--n", "16"]) == EXIT_OK
    E = float(parse_summary(capsys.readouterr().out)["E_h"])
    assert 1.62e-1 / 2 <= E <= 1.62e-1 * 2


def test_exit_codes(capsys, tmp_path):
    assert main(["solve", "--preset", "example1", "--eta", "1e-6", "--n", "8"]) == EXIT_SOLVER
    assert main(["solve", "--preset", "example2", "--n", "6"]) == EXIT_ALIGNMENT
    assert main(["convergence", "--preset", "example1", "--levels", "4,8"]) == EXIT_CONFIG
    assert main(["convergence", "--preset", "example1", "--levels", "4,8,12"]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--preset", "nope"])
    assert exc.value.code == 2


def test_run_config_levels():
    with pytest.raises(InvalidParam):
        RunConfig("convergence", "example1", levels=[4, 12])
    assert RunConfig("convergence", "example1", levels=[4, 8, 16]).kind == "rectangle"


def test_convergence_csv_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["convergence", "--preset", "example2", "--levels", "4,8,16"]
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "h,E_h,R_h,e_h,r_h" and len(lines) == 4


def test_convergence_cg_and_alternative(capsys):
    assert main(["convergence", "--preset", "patch", "--solver", "cg", "--scheme", "alternative",
                 "--element", "p1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("h,E_h,R_h,e_h,r_h")


def test_verify(tmp_path, capsys):
    path = tmp_path / "v.csv"
    assert main(["verify", "--preset", "example1", "--n", "2", "--etas", "0.01,1,40",
                 "--out", str(path)]) == EXIT_OK
    lines = path.read_text().splitlines()
    assert lines[0] == "mesh,eta,min_eig" and len(lines) == 4
    assert float(lines[1].split(",")[2]) <= 0 < float(lines[3].split(",")[2])
    assert "eta* estimate" in capsys.readouterr().out


def test_dump_mesh(tmp_path, capsys):
    path = tmp_path / "mesh.txt"
    assert main(["solve", "--preset", "patch", "--n", "2", "--dump-mesh", str(path)]) == EXIT_OK
    assert "ELEMENTS" in path.read_text()

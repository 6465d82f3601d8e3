"""Command-line interface: determinism, formats, exit codes."""

import csv
import json
import os

import numpy as np
import pytest

from acmp import fock
from acmp.cli import main
from acmp.hamiltonians import load_hamiltonian, random_hamiltonian


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gen_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.acmph", tmp_path / "b.acmph"
    assert run(capsys, "gen", "--n", "5", "--seed", "0", "--output", str(a))[0] == 0
    assert run(capsys, "gen", "--n", "5", "--seed", "0", "--output", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_file_reloads_and_validates(tmp_path, capsys):
    path = tmp_path / "h.acmph"
    run(capsys, "gen", "--n", "4", "--seed", "1", "--output", str(path))
    ham = load_hamiltonian(path)
    ref = random_hamiltonian(4, 1)
    assert np.allclose(ham.h1, ref.h1, atol=1e-15)
    assert np.allclose(ham.h2, ref.h2, atol=1e-15)


def test_gen_pure_one_body(tmp_path, capsys):
    path = tmp_path / "h.acmph"
    run(capsys, "gen", "--n", "4", "--seed", "0", "--two-body-scale", "0", "--output", str(path))
    assert np.all(load_hamiltonian(path).h2 == 0.0)


def test_oracle_diagonal(tmp_path, capsys):
    # h = diag(1,2,3): two particles fill the two lowest levels
    path = tmp_path / "h.acmph"
    path.write_text(
        "ACMPH v1\nn 3\nh1 1 1 1\nh1 2 2 2\nh1 3 3 3\n"
    )
    code, out, _ = run(capsys, "oracle", "--input", str(path), "--N", "2")
    assert code == 0
    assert float(out.split("=")[1]) == pytest.approx(3.0, abs=1e-12)


def test_oracle_matches_library(capsys):
    code, out, _ = run(capsys, "oracle", "--n", "5", "--seed", "3", "--N", "2")
    assert code == 0
    energy, _ = fock.ground_state(random_hamiltonian(5, 3), 5, 2)
    assert float(out.split("=")[1]) == pytest.approx(energy, abs=1e-13)


def test_oracle_guard_error(capsys):
    code, _, err = run(capsys, "oracle", "--n", "20", "--N", "10")
    assert code == 1
    assert "guard" in err


def test_oracle_rdm_dump(tmp_path, capsys):
    prefix = str(tmp_path / "d")
    code, _, _ = run(capsys, "oracle", "--n", "4", "--seed", "0", "--N", "2", "--dump-rdm", prefix)
    assert code == 0
    g1 = np.load(prefix + ".rdm1.npy")
    assert np.trace(g1) == pytest.approx(2.0, abs=1e-10)


def test_solve_csv_roundtrip(tmp_path, capsys):
    out_path = tmp_path / "rows.csv"
    code, _, _ = run(
        capsys,
        "solve", "--n", "3", "--N", "2", "--seeds", "0..2", "--two-body-scale", "0.1",
        "--tol", "1e-8", "--format", "csv", "--output", str(out_path),
    )
    assert code == 0
    with open(out_path) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["seed"] for r in rows] == ["0", "1", "2"]
    for r in rows:
        # 17-significant-digit output round-trips numerically
        e = float(r["energy"])
        assert format(e, ".17g") == r["energy"]
        assert abs(float(r["energy_error"])) <= 1e-7


def test_solve_jsonl(capsys):
    code, out, _ = run(
        capsys,
        "solve", "--n", "3", "--N", "2", "--seed", "1", "--two-body-scale", "0.1",
        "--tol", "1e-8", "--format", "jsonl",
    )
    assert code == 0
    row = json.loads(out.strip())
    assert row["n"] == 3 and row["seed"] == 1
    assert row["converged"] is True


def test_solve_table_mean_footer(capsys):
    code, out, _ = run(
        capsys,
        "solve", "--n", "3", "--N", "2", "--seeds", "0,1", "--two-body-scale", "0.1",
        "--tol", "1e-8",
    )
    assert code == 0
    assert "mean |energy error|" in out


def test_solve_resume(tmp_path, capsys):
    ckpt = str(tmp_path / "c.ckpt")
    args = ("solve", "--n", "3", "--N", "2", "--seed", "0", "--two-body-scale", "0.1",
            "--tol", "1e-8", "--resume", ckpt, "--format", "jsonl")
    code, out, _ = run(capsys, *args)
    assert code == 0
    assert os.path.exists(ckpt)
    code, out, _ = run(capsys, *args)
    assert code == 0
    assert json.loads(out.strip())["iterations"] == 0


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_io_error_exits_one(capsys):
    code, _, err = run(capsys, "oracle", "--input", "/nonexistent/h.acmph", "--N", "2")
    assert code == 1


def test_gradcheck_passes(capsys):
    code, out, _ = run(capsys, "gradcheck")
    assert code == 0
    assert "PASS" in out
    code, out, _ = run(capsys, "gradcheck", "--symmetrized")
    assert code == 0


def test_gradcheck_large_step_still_informative(capsys):
    code, out, _ = run(capsys, "gradcheck", "--step", "1e-2")
    assert "max relative error" in out

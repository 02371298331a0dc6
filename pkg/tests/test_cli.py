import json
import subprocess
import sys

import pytest

from kahlerlab.cli import EXIT_FAIL, EXIT_PASS, EXIT_UNSTABLE, EXIT_USAGE, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    report = json.loads(out.out) if out.out.strip() else None
    return code, report, out.err


def test_verify_identities(capsys):
    code, rep, err = run(["verify-identities"], capsys)
    assert code == EXIT_PASS and rep["passed"] and rep["schema"] == 1
    assert all("tol" in c for c in rep["checks"])
    assert "PASS" in err


def test_verify_identities_subset_and_zero_tolerance(capsys):
    code, rep, _ = run(["verify-identities", "--dim", "1"], capsys)
    assert code == EXIT_PASS
    assert [c["name"] for c in rep["checks"]] == ["Q_m1 vanishes (dim 1)"]
    code, rep, _ = run(["verify-identities", "--tol", "0"], capsys)
    assert code == EXIT_FAIL and not rep["passed"]


@pytest.mark.parametrize("k,dim,expected", [(2, 3, 2), (1, 2, 1), (3, 3, 3)])
def test_kernel_dim(k, dim, expected, capsys):
    code, rep, _ = run(["kernel-dim", "--k", str(k), "--dim", str(dim)], capsys)
    assert code == EXIT_PASS
    assert rep["kernel_dim"] == rep["rho"] == expected
    assert rep["pattern_count"] == len(rep["patterns"])


def test_kernel_dim_tensor_and_order3(capsys):
    code, rep, _ = run(["kernel-dim", "--k", "2", "--dim", "4", "--valued", "tensor"], capsys)
    assert code == EXIT_PASS and rep["kernel_dim"] == 2
    code, rep, _ = run(["kernel-dim", "--k", "2", "--dim", "3", "--include-order3"], capsys)
    assert code == EXIT_PASS
    assert any(c["name"] == "order-3 coefficient" for c in rep["checks"])


def test_euler_lagrange(capsys):
    code, rep, _ = run(["euler-lagrange", "--dim", "2", "--k", "1", "--poly", "tr1"], capsys)
    assert code == EXIT_PASS
    assert rep["report"]["rel_err"] <= 1e-5
    assert rep["report"]["step"] == 1e-4
    code, rep, _ = run(["euler-lagrange", "--dim", "2", "--k", "1", "--poly", "tr1", "--zero-variation"], capsys)
    assert code == EXIT_PASS
    assert rep["report"]["lhs"] == rep["report"]["rhs"] == 0


def test_euler_lagrange_unresolvable_step(capsys):
    # a step this small leaves the difference quotient dominated by rounding
    code, rep, _ = run(["euler-lagrange", "--dim", "2", "--k", "1", "--poly", "tr1", "--step", "1e-13"], capsys)
    assert code == EXIT_UNSTABLE
    assert "inconclusive" in rep


@pytest.mark.parametrize(
    "argv,value,tol",
    [
        (["--space", "cp1", "--class", "c1", "--normalized"], 2.0, 1e-8),
        (["--space", "torus2", "--class", "tr1tr1"], 0.0, 0.0),
        (["--space", "cp1xcp1", "--class", "c1c1", "--normalized"], 8.0, 1e-6),
    ],
)
def test_char_number(argv, value, tol, capsys):
    code, rep, _ = run(["char-number"] + argv, capsys)
    assert code == EXIT_PASS
    assert abs(rep["value"] - value) <= tol


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["kernel-dim", "--k", "2"],
        ["kernel-dim", "--k", "1", "--dim", "1", "--valued", "tensor"],
        ["euler-lagrange", "--dim", "2", "--k", "2", "--poly", "tr2"],
        ["euler-lagrange", "--dim", "2", "--k", "1", "--poly", "tr1", "--step", "-1"],
        ["char-number", "--space", "cp2", "--class", "c1"],
        ["char-number", "--space", "klein", "--class", "c1"],
        ["verify-identities", "--samples", "0"],
    ],
)
def test_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == EXIT_USAGE
    assert "kahlerlab" in err


def test_reports_are_byte_identical(tmp_path, monkeypatch):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    main(["euler-lagrange", "--dim", "3", "--k", "2", "--poly", "tr2", "--seed", "4", "--json", str(paths[0])])
    monkeypatch.setenv("KFORGE_THREADS", "3")
    main(["--json", str(paths[1]), "euler-lagrange", "--dim", "3", "--k", "2", "--poly", "tr2", "--seed", "4"])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kahlerlab", "kernel-dim", "--k", "1", "--dim", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kernel_dim"] == 1

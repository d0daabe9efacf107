import argparse
import copy
import json
from pathlib import Path

import pytest

from create_example_problems import EXAMPLES
from sl_spectral import cli
from sl_spectral.core.problem_file import write_problem_file
from sl_utils import config

PROBLEMS = Path(__file__).parent.parent / "problems"
WORKED = PROBLEMS / "worked_example.json"


def run(capsys, *argv) -> tuple[int, dict | None, str]:
    code = cli.main([str(a) for a in argv])
    captured = capsys.readouterr()
    payload = json.loads(captured.out) if captured.out else None
    return code, payload, captured.err


def variant(tmp_path, filename: str = "variant.json", **changes) -> Path:
    document = copy.deepcopy(EXAMPLES["worked_example.json"])
    document["name"] = Path(filename).stem
    for key, value in changes.items():
        document[key] = value
    return write_problem_file(document, tmp_path / filename)


def test_parse_window():
    assert cli.parse_window("-1:120") == (-1.0, 120.0)
    for bad in ("1", "a:b", "5:1"):
        with pytest.raises(argparse.ArgumentTypeError):
            cli.parse_window(bad)


def test_parse_k_list():
    assert cli.parse_k_list("1,10,100") == [1, 10, 100]
    for bad in ("", "1,x", "-1"):
        with pytest.raises(argparse.ArgumentTypeError):
            cli.parse_k_list(bad)


def test_validate_worked_example(capsys):
    code, payload, _ = run(capsys, "validate", WORKED)
    assert code == cli.EXIT_OK
    assert payload["passed"] is True
    assert payload["case"] == "Case1"
    assert payload["eta"] == "Gamma0b y = 0"
    assert payload["trivial_weight"] is False


def test_validate_trivial_weight(capsys, tmp_path):
    path = variant(tmp_path, coefficients={"p": "1", "q": "0", "delta": "0"})
    code, payload, _ = run(capsys, "validate", path)
    assert code == cli.EXIT_FAILED
    assert payload["trivial_weight"] is True
    assert any("trivial weight" in issue for issue in payload["coefficients"]["issues"])


def test_validate_wrong_orientation(capsys, tmp_path):
    path = variant(tmp_path, right_pair={"C0": "lambda", "C1": "1"})
    code, payload, _ = run(capsys, "validate", path)
    assert code == cli.EXIT_FAILED
    assert payload["pair"]["failures"] == ["nevanlinna_sign"]
    assert "Im(lambda)" in payload["pair"]["messages"][0]


def test_validate_case2(capsys):
    code, payload, _ = run(capsys, "validate", PROBLEMS / "robin_case2.json")
    assert code == cli.EXIT_OK
    assert payload["case"] == "Case2"
    assert payload["classification"]["Dhat_inf"] == pytest.approx(1.0)


def test_spectrum_worked_example(capsys):
    code, payload, _ = run(capsys, "spectrum", WORKED)
    assert code == cli.EXIT_OK
    assert payload["window"] == [-1.0, 120.0]
    assert len(payload["eigenvalues"]) == 4
    assert payload["eigenvalues"][0]["xi"] == pytest.approx(0.5, rel=1e-6)
    assert payload["eigenvalues"][1]["t"] == pytest.approx(4.11586, abs=1e-5)


def test_spectrum_empty_window(capsys):
    code, payload, _ = run(capsys, "spectrum", WORKED, "--window=-10:-5")
    assert code == cli.EXIT_OK
    assert payload["eigenvalues"] == []


def test_spectrum_dirichlet_variant(capsys):
    code, payload, _ = run(capsys, "spectrum", PROBLEMS / "worked_example_dirichlet.json", "--window=0:100")
    assert code == cli.EXIT_OK
    assert [round(row["xi"], 6) for row in payload["eigenvalues"]] == [2.0, 2.0, 2.0]


def test_output_is_deterministic(capsys):
    cli.main(["spectrum", str(WORKED), "--window=-1:30"])
    first = capsys.readouterr().out
    cli.main(["spectrum", str(WORKED), "--window=-1:30"])
    assert capsys.readouterr().out == first


def test_spectrum_cache_round_trip(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(config, "SPECTRUM_CACHE_DB_PATH", tmp_path / "cache.db")
    _, fresh, _ = run(capsys, "spectrum", WORKED, "--window=-1:30", "--cache")
    _, cached, _ = run(capsys, "spectrum", WORKED, "--window=-1:30", "--cache")
    assert cached == fresh
    assert (tmp_path / "cache.db").exists()


def test_expand_constant_target(capsys, tmp_path):
    path = variant(tmp_path, "constant.json", target={"y": "1", "dy": "0", "f_y": "0"})
    out = tmp_path / "out"
    code, payload, _ = run(capsys, "expand", path, "--K", "1", "--out", out)
    assert code == cli.EXIT_OK
    assert payload["bhat"] == [pytest.approx(0.5, rel=1e-6)]
    assert payload["residuals"] == [{"K": 1, "residual": pytest.approx(0.5, rel=1e-6)}]

    lines = (out / "constant_expansion.csv").read_text().strip().split("\n")
    assert lines[0] == "x,y,S_1,y_0"
    assert all(float(line.split(",")[2]) == pytest.approx(0.5, rel=1e-6) for line in lines[1:])
    assert json.loads((out / "constant_expansion.json").read_text()) == json.loads(json.dumps(payload))


def test_expand_zero_target(capsys, tmp_path):
    path = variant(tmp_path, "zero.json", target={"y": "0"})
    out = tmp_path / "out"
    code, payload, _ = run(capsys, "expand", path, "--K", "0,3", "--out", out)
    assert code == cli.EXIT_OK
    assert payload["bhat"] == [0.0, 0.0, 0.0]
    rows = [line.split(",") for line in (out / "zero_expansion.csv").read_text().strip().split("\n")[1:]]
    assert all(float(v) == 0.0 for row in rows for v in row[1:])


def test_expand_without_target_fails(capsys):
    code, payload, err = run(capsys, "expand", PROBLEMS / "robin_case2.json", "--K", "1")
    assert code == cli.EXIT_FAILED
    assert payload is None
    assert "no 'target' section" in err


def test_converge_small(capsys):
    code, payload, _ = run(capsys, "converge", WORKED, "--K", "4,12")
    assert code == cli.EXIT_OK
    assert payload["uniform"]["verdict"] == "uniform convergence guaranteed"
    assert payload["sup_decreasing"] is True
    assert payload["l2"]["bessel_ok"] is True


def test_oracle_scope_error(capsys, tmp_path):
    path = variant(tmp_path, right_pair={"C0": "sin(lambda)", "C1": "-1"}, window=[-1, 10])
    code, payload, err = run(capsys, "oracle-compare", path, "--grid", "64")
    assert code == cli.EXIT_FAILED
    assert payload is None
    assert "oracle scope" in err


def test_oracle_compare_coarse(capsys):
    code, payload, _ = run(capsys, "oracle-compare", WORKED, "--grid", "1024", "--window=-1:30")
    assert code == cli.EXIT_OK
    assert payload["grid"] == 1024
    assert len(payload["matches"]) == 3
    assert payload["max_gap"] < 1e-3


def test_problem_file_errors_exit_2(capsys, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"interval": {"a": 0, "b": 1}}), encoding="utf-8")
    code, payload, err = run(capsys, "validate", broken)
    assert code == cli.EXIT_USAGE
    assert payload is None
    assert "missing key(s)" in err
    assert run(capsys, "validate", tmp_path / "missing.json")[0] == cli.EXIT_USAGE


def test_bad_flags_exit_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["spectrum", str(WORKED), "--window=5:1"])
    assert info.value.code == 2


@pytest.mark.slow
def test_converge_large_k(capsys):
    code, payload, _ = run(capsys, "converge", WORKED, "--K", "10,25,50,100")
    assert code == cli.EXIT_OK
    rows = payload["uniform"]["rows"]
    assert [row["K"] for row in rows] == [10, 25, 50, 100]
    sups = [row["sup_residual"] for row in rows]
    assert all(b < a for a, b in zip(sups, sups[1:])), sups
    assert payload["sup_decreasing"] is True
    assert sups[-1] < 1e-2


@pytest.mark.slow
@pytest.mark.parametrize("filename", ["worked_example.json", "worked_example_dirichlet.json"])
def test_oracle_compare_fine_grid(capsys, filename):
    code, payload, _ = run(capsys, "oracle-compare", PROBLEMS / filename, "--window=-1:120")
    assert code == cli.EXIT_OK
    assert payload["max_gap"] < 1e-3

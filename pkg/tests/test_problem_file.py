import copy
import json
import math
from pathlib import Path

import pytest

from create_example_problems import EXAMPLES, create_example_problems
from sl_spectral.core.errors import ProblemFileError
from sl_spectral.core.problem_file import default_tolerances, load_problem_file, parse_document, write_problem_file
from sl_spectral.services.sl_core import Regularity

PROBLEMS = Path(__file__).parent.parent / "problems"

WORKED = EXAMPLES["worked_example.json"]


def test_load_worked_example():
    spec = load_problem_file(PROBLEMS / "worked_example.json")
    assert spec.name == "worked_example"
    assert spec.window == (-1.0, 120.0)
    assert spec.problem.B == pytest.approx(math.pi / 2)
    assert spec.pair.describe() == {"C0": "lambda", "C1": "-1.0"}
    assert set(spec.target) == {"y", "dy", "f_y"}


def test_load_yaml_halfline():
    spec = load_problem_file(PROBLEMS / "halfline_exp.yaml")
    assert spec.problem.b == math.inf
    assert spec.problem.regularity is Regularity.QUASIREGULAR
    assert spec.target is None


@pytest.mark.parametrize("filename", sorted(EXAMPLES))
def test_bundled_files_match_generator(filename):
    spec = load_problem_file(PROBLEMS / filename)
    assert spec.name == EXAMPLES[filename]["name"]
    assert spec.document == json.loads(json.dumps(EXAMPLES[filename]))


def test_generator_writes_loadable_files(tmp_path):
    written = create_example_problems(tmp_path)
    assert sorted(p.name for p in written) == sorted(EXAMPLES)
    for path in written:
        load_problem_file(path)


def test_name_defaults_to_file_stem(tmp_path):
    document = copy.deepcopy(WORKED)
    del document["name"]
    path = write_problem_file(document, tmp_path / "unnamed.json")
    assert load_problem_file(path).name == "unnamed"


def test_tolerance_overrides():
    document = copy.deepcopy(WORKED)
    document["tolerances"] = {"root": 1e-8, "ode_rel": "1e-9"}
    spec = parse_document(document)
    assert spec.problem.tolerances.root == 1e-8
    assert spec.problem.tolerances.ode_rel == 1e-9
    assert spec.problem.tolerances.quad == default_tolerances()["quad"]


def test_knots_are_sorted():
    document = copy.deepcopy(WORKED)
    document["knots"] = [0.75, "1/4"]
    assert parse_document(document).problem.knots == (0.25, 0.75)


def test_constant_right_condition():
    spec = load_problem_file(PROBLEMS / "worked_example_dirichlet.json")
    assert spec.pair.describe() == {"C0": "1.0", "C1": "0.0"}


def _broken(**changes):
    document = copy.deepcopy(WORKED)
    for key, value in changes.items():
        if value is None:
            document.pop(key, None)
        else:
            document[key] = value
    return document


@pytest.mark.parametrize("document, message", [
    (_broken(extra=1), "unknown key(s) ['extra']"),
    (_broken(coefficients={"p": "1", "r": "0"}), "coefficients: unknown key(s) ['r']"),
    (_broken(interval=None), "missing key(s) ['interval']"),
    (_broken(right_bc_constant={"B1": 0}), "exactly one of right_pair and right_bc_constant"),
    (_broken(right_pair=None), "exactly one of right_pair and right_bc_constant"),
    (_broken(window=[5, 1]), "window: needs lo < hi"),
    (_broken(window=[1]), "window: must be [lo, hi]"),
    (_broken(coefficients={"delta": "lambda"}), "lambda not allowed here"),
    (_broken(right_pair={"C0": "x", "C1": "-1"}), "x not allowed here"),
    (_broken(interval={"a": 0, "b": "inf"}), "interval"),
    (_broken(interval={"a": 0, "b": 1, "regularity": "singular"}), "must be 'regular' or 'quasiregular'"),
    (_broken(left_bc={"B": "x"}), "expected a constant"),
    (_broken(target={"dy": "1"}), "missing key(s) ['y']"),
])
def test_schema_errors(document, message):
    with pytest.raises(ProblemFileError) as info:
        parse_document(document, "case.json")
    assert message in str(info.value)
    assert str(info.value).startswith("case.json")


def test_unreadable_files(tmp_path):
    with pytest.raises(ProblemFileError, match="cannot read file"):
        load_problem_file(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ProblemFileError, match="not valid json"):
        load_problem_file(bad)
    listed = tmp_path / "list.yaml"
    listed.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ProblemFileError, match="top level must be an object"):
        load_problem_file(listed)


def test_write_refuses_invalid_documents(tmp_path):
    target = tmp_path / "invalid.json"
    with pytest.raises(ProblemFileError):
        write_problem_file(_broken(window=[2, 1]), target)
    assert not target.exists()


def test_yaml_round_trip(tmp_path):
    path = write_problem_file(copy.deepcopy(WORKED), tmp_path / "worked.yaml")
    spec = load_problem_file(path)
    assert spec.document == WORKED

"""Problem files: schema, loader and writer.

A problem file is a JSON (or YAML) document::

    {
      "name": "worked-example",                      optional
      "interval": {"a": 0, "b": 1, "regularity": "regular"},
      "coefficients": {"p": "1", "q": "0", "delta": "1"},
      "left_bc": {"B": "pi/2"},
      "right_pair": {"C0": "lambda", "C1": "-1"},    or "right_bc_constant": {"B1": 0}
      "window": [-1, 120],
      "tolerances": {"ode_rel": 1e-10, ...},         optional, defaults below
      "target": {"y": "1", "dy": "0", "f_y": "0"},   optional; dy is y', not y^[1]
      "knots": [0.5]                                 optional extra mesh points
    }

``b`` may be the string "inf" for quasiregular half-lines. Real-valued
entries accept numbers or constant expressions such as "pi/2". Unknown keys
are rejected.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from . import expr as ex
from .errors import ExprError, ProblemError, ProblemFileError
from .utils import dump_json

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {
    "name", "interval", "coefficients", "left_bc", "right_pair", "right_bc_constant",
    "window", "tolerances", "target", "knots",
}
SECTION_KEYS = {
    "interval": ({"a", "b"}, {"regularity"}),
    "coefficients": (set(), {"p", "q", "delta"}),
    "left_bc": (set(), {"B"}),
    "right_pair": ({"C0", "C1"}, set()),
    "right_bc_constant": ({"B1"}, set()),
    "tolerances": (set(), {"ode_rel", "ode_abs", "quad", "root", "tail"}),
    "target": ({"y"}, {"dy", "f_y"}),
}


@dataclass
class ProblemSpec:
    """Everything a command needs from one problem file."""

    problem: Any  # sl_core.Problem
    pair: Any  # nevpair.EntirePair
    window: tuple[float, float] | None = None
    target: dict[str, str] | None = None
    name: str | None = None
    document: dict = field(default_factory=dict)


def _fail(path: str, message: str) -> ProblemFileError:
    return ProblemFileError(f"{path}: {message}")


def _check_keys(section: dict, path: str, required: set, optional: set) -> None:
    if not isinstance(section, dict):
        raise _fail(path, "must be an object")
    unknown = set(section) - required - optional
    if unknown:
        raise _fail(path, f"unknown key(s) {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise _fail(path, f"missing key(s) {sorted(missing)}")


def _real(value, path: str, allow_inf: bool = False) -> float:
    """A number, "inf" (where allowed) or a constant expression."""
    if isinstance(value, bool):
        raise _fail(path, "expected a real number")
    if isinstance(value, (int, float)):
        result = float(value)
    elif isinstance(value, str):
        if value.strip() in ("inf", "+inf", "infinity"):
            result = math.inf
        else:
            try:
                node = ex.parse(value)
            except ExprError as e:
                raise _fail(path, str(e)) from e
            if ex.symbols(node):
                raise _fail(path, f"expected a constant, found symbol(s) {sorted(ex.symbols(node))}")
            result = float(ex.eval_real(node, 0.0))
    else:
        raise _fail(path, "expected a real number")
    if math.isinf(result) and not allow_inf or math.isnan(result):
        raise _fail(path, f"expected a finite number, got {value!r}")
    return result


def _expression(value, path: str, slot: ex.Slot) -> str:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = repr(float(value))
    if not isinstance(value, str):
        raise _fail(path, "expected an expression string")
    try:
        ex.parse(value, slot)
    except ExprError as e:
        raise _fail(path, str(e)) from e
    return value


def parse_document(document: dict, source: str = "<document>"):
    """Validate a decoded problem document and build a ProblemSpec.

    Raises:
        ProblemFileError: on any schema violation.
    """
    from ..services.nevpair import EntirePair
    from ..services.sl_core import Coefficients, Problem, Regularity, Tolerances

    _check_keys(document, source, {"interval", "coefficients", "left_bc"}, TOP_LEVEL_KEYS - {"interval", "coefficients", "left_bc"})
    for key, (required, optional) in SECTION_KEYS.items():
        if key in document:
            _check_keys(document[key], f"{source}:{key}", required, optional)
    if ("right_pair" in document) == ("right_bc_constant" in document):
        raise _fail(source, "exactly one of right_pair and right_bc_constant is required")

    interval = document["interval"]
    try:
        regularity = Regularity(interval.get("regularity", "regular"))
    except ValueError:
        raise _fail(f"{source}:interval.regularity", "must be 'regular' or 'quasiregular'") from None
    a = _real(interval["a"], f"{source}:interval.a")
    b = _real(interval["b"], f"{source}:interval.b", allow_inf=True)

    coefficients = document["coefficients"]
    exprs = {
        name: _expression(coefficients.get(name, default), f"{source}:coefficients.{name}", ex.Slot.COEFFICIENT)
        for name, default in (("p", "1"), ("q", "0"), ("delta", "1"))
    }
    B = _real(document["left_bc"].get("B", math.pi / 2), f"{source}:left_bc.B")

    if "right_pair" in document:
        right = document["right_pair"]
        pair = EntirePair.from_strings(
            _expression(right["C0"], f"{source}:right_pair.C0", ex.Slot.PAIR),
            _expression(right["C1"], f"{source}:right_pair.C1", ex.Slot.PAIR),
        )
    else:
        pair = EntirePair.constant(_real(document["right_bc_constant"]["B1"], f"{source}:right_bc_constant.B1"))

    tolerances = Tolerances(**{
        key: _real(value, f"{source}:tolerances.{key}") for key, value in document.get("tolerances", {}).items()
    })

    knots = document.get("knots", [])
    if not isinstance(knots, list):
        raise _fail(f"{source}:knots", "must be a list")
    knots = tuple(sorted(_real(k, f"{source}:knots[{i}]") for i, k in enumerate(knots)))

    window = None
    if "window" in document:
        window = document["window"]
        if not isinstance(window, list) or len(window) != 2:
            raise _fail(f"{source}:window", "must be [lo, hi]")
        window = (_real(window[0], f"{source}:window[0]"), _real(window[1], f"{source}:window[1]"))
        if not window[0] < window[1]:
            raise _fail(f"{source}:window", "needs lo < hi")

    target = None
    if "target" in document:
        target = {
            key: _expression(value, f"{source}:target.{key}", ex.Slot.COEFFICIENT)
            for key, value in document["target"].items()
        }

    name = document.get("name")
    if name is not None and not isinstance(name, str):
        raise _fail(f"{source}:name", "must be a string")

    try:
        problem = Problem(
            a=a, b=b, coeffs=Coefficients.from_strings(**exprs), B=B,
            regularity=regularity, tolerances=tolerances, knots=knots,
        )
    except ProblemError as e:
        raise _fail(f"{source}:interval", str(e)) from e

    return ProblemSpec(problem, pair, window, target, name, document)


def load_problem_file(path: str | Path) -> ProblemSpec:
    """Read a .json, .yaml or .yml problem file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ProblemFileError(f"{path}: cannot read file ({e.strerror})") from e
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            document = yaml.safe_load(text)
        else:
            document = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ProblemFileError(f"{path}: not valid {path.suffix.lstrip('.') or 'json'}: {e}") from e
    if not isinstance(document, dict):
        raise ProblemFileError(f"{path}: top level must be an object")
    logger.debug(f"Loaded problem file {path}")
    spec = parse_document(document, str(path))
    if spec.name is None:
        spec.name = path.stem
    return spec


def default_tolerances() -> dict[str, float]:
    """The tolerance keys a problem file may set, with their defaults."""
    from ..services.sl_core import Tolerances

    return asdict(Tolerances())


def write_problem_file(document: dict, path: str | Path) -> Path:
    """Validate ``document`` and write it as JSON (or YAML for .yaml/.yml)."""
    path = Path(path)
    parse_document(document, str(path))
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() in (".yaml", ".yml"):
        path.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
    else:
        path.write_text(dump_json(document), encoding="utf-8")
    return path

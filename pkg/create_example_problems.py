"""Write the bundled example problem files into problems/."""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent / "src"))

from sl_spectral.core.problem_file import write_problem_file  # noqa: E402

PROBLEMS_DIR = Path("problems")

EXAMPLES = {
    # -y'' = lambda y on [0, 1], y'(0) = 0, lambda-dependent right condition lambda y(1) - y'(1) = 0
    "worked_example.json": {
        "name": "worked_example",
        "interval": {"a": 0, "b": 1, "regularity": "regular"},
        "coefficients": {"p": "1", "q": "0", "delta": "1"},
        "left_bc": {"B": "pi/2"},
        "right_pair": {"C0": "lambda", "C1": "-1"},
        "window": [-1, 120],
        "target": {
            "y": "cos(3*pi*x/2)",
            "dy": "-(3*pi/2)*sin(3*pi*x/2)",
            "f_y": "(9*pi^2/4)*cos(3*pi*x/2)",
        },
    },
    "worked_example_dirichlet.json": {
        "name": "worked_example_dirichlet",
        "interval": {"a": 0, "b": 1, "regularity": "regular"},
        "coefficients": {"p": "1", "q": "0", "delta": "1"},
        "left_bc": {"B": "pi/2"},
        "right_bc_constant": {"B1": 0},
        "window": [-1, 300],
        "target": {"y": "cos(pi*x/2)", "dy": "-(pi/2)*sin(pi*x/2)", "f_y": "(pi^2/4)*cos(pi*x/2)"},
    },
    # weight vanishes on (1/2, 1]
    "indicator_weight.json": {
        "name": "indicator_weight",
        "interval": {"a": 0, "b": 1, "regularity": "regular"},
        "coefficients": {"p": "1", "q": "0", "delta": "indicator(0, 0.5)"},
        "left_bc": {"B": "pi/2"},
        "right_bc_constant": {"B1": 0},
        "window": [-1, 120],
        "target": {"y": "x", "dy": "1"},
    },
    # tau = -1/lambda: Case 2 with D_inf = 0
    "robin_case2.json": {
        "name": "robin_case2",
        "interval": {"a": 0, "b": 1, "regularity": "regular"},
        "coefficients": {"p": "1", "q": "0", "delta": "1"},
        "left_bc": {"B": "pi/2"},
        "right_pair": {"C0": "1", "C1": "lambda"},
        "window": [-5, 120],
    },
    "halfline_exp.yaml": {
        "name": "halfline_exp",
        "interval": {"a": 0, "b": "inf", "regularity": "quasiregular"},
        "coefficients": {"p": "1", "q": "0", "delta": "exp(-x)"},
        "left_bc": {"B": math.pi / 2},
        "right_bc_constant": {"B1": 0},
        "window": [-1, 40],
    },
}


def create_example_problems(directory: Path = PROBLEMS_DIR) -> list[Path]:
    written = []
    for filename, document in EXAMPLES.items():
        path = write_problem_file(document, directory / filename)
        print(f"Created {path}")
        written.append(path)
    return written


if __name__ == "__main__":
    create_example_problems()

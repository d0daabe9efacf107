import asyncio
from pathlib import Path

import pytest

from sl_mcp_server import server
from sl_mcp_server.tools import SpectralTools

PROBLEMS = Path(__file__).parent.parent / "problems"
WORKED = str(PROBLEMS / "worked_example.json")


@pytest.fixture
def tools():
    return SpectralTools()


def test_server_registers_tools():
    registered = asyncio.run(server.mcp.get_tools())
    names = set(registered) if isinstance(registered, dict) else {tool.name for tool in registered}
    assert names == {"validate_problem", "compute_spectrum", "expand_function", "compare_with_oracle"}


def test_validate_problem(tools):
    report = tools.validate_problem(WORKED)
    assert report["passed"] is True
    assert report["case"] == "Case1"


def test_missing_file(tools, tmp_path):
    with pytest.raises(FileNotFoundError, match="not found"):
        tools.validate_problem(str(tmp_path / "missing.json"))


def test_compute_spectrum(tools):
    result = asyncio.run(tools.compute_spectrum(WORKED, [-1.0, 30.0], use_cache=False))
    assert result["window"] == [-1.0, 30.0]
    assert [round(row["t"], 4) for row in result["eigenvalues"]] == [0.0, 4.1159, 24.1393]


def test_bad_window(tools):
    with pytest.raises(ValueError):
        asyncio.run(tools.compute_spectrum(WORKED, [3.0, 1.0], use_cache=False))


def test_expand_function(tools):
    result = asyncio.run(tools.expand_function(WORKED, [1, 4]))
    assert len(result["bhat"]) == 4
    assert [row["K"] for row in result["residuals"]] == [1, 4]
    assert result["residuals"][1]["residual"] < result["residuals"][0]["residual"]


def test_compare_with_oracle(tools):
    result = asyncio.run(tools.compare_with_oracle(WORKED, grid=1024, window=[-1.0, 30.0]))
    assert result["passed"] is True
    assert len(result["matches"]) == 3

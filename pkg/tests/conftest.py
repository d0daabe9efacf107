"""Shared problem builders and closed-form reference values."""

import math

import pytest

from sl_spectral.services import oracle
from sl_spectral.services.characteristic import CharacteristicPair
from sl_spectral.services.nevpair import EntirePair
from sl_spectral.services.sl_core import Coefficients, Problem, Regularity


def worked_roots(count: int) -> list[float]:
    """Positive roots s_1 .. s_count of s + tan(s) = 0."""
    eps = 1e-9
    f = lambda s: s + math.tan(s)  # noqa: E731
    return [oracle.bisect_root(f, (k - 0.5) * math.pi + eps, (k + 0.5) * math.pi - eps, 1e-14) for k in range(1, count + 1)]


def gluing_roots(count: int) -> list[float]:
    """Eigenvalues 4u^2 of the half-weight problem, u tan u = 1."""
    eps = 1e-12
    f = lambda u: u * math.sin(u) - math.cos(u)  # noqa: E731
    roots = [oracle.bisect_root(f, eps, math.pi / 2, 1e-15)]
    roots += [oracle.bisect_root(f, k * math.pi, k * math.pi + math.pi / 2, 1e-14) for k in range(1, count)]
    return [4.0 * u * u for u in roots]


@pytest.fixture(scope="session")
def worked_problem() -> Problem:
    """-y'' = lambda y on [0, 1] with y'(0) = 0."""
    return Problem(a=0.0, b=1.0, coeffs=Coefficients.from_strings("1", "0", "1"), B=math.pi / 2)


@pytest.fixture(scope="session")
def worked_pair() -> EntirePair:
    return EntirePair.from_strings("lambda", "-1")


@pytest.fixture(scope="session")
def dirichlet_pair() -> EntirePair:
    return EntirePair.constant(0.0)


@pytest.fixture(scope="session")
def indicator_problem() -> Problem:
    return Problem(a=0.0, b=1.0, coeffs=Coefficients.from_strings("1", "0", "indicator(0, 0.5)"), B=math.pi / 2)


@pytest.fixture(scope="session")
def halfline_problem() -> Problem:
    return Problem(
        a=0.0, b=math.inf, coeffs=Coefficients.from_strings("1", "0", "exp(-x)"),
        B=math.pi / 2, regularity=Regularity.QUASIREGULAR,
    )


@pytest.fixture(scope="session")
def worked_cp(worked_problem, worked_pair) -> CharacteristicPair:
    return CharacteristicPair.build(worked_problem, worked_pair)


@pytest.fixture(scope="session")
def dirichlet_cp(worked_problem, dirichlet_pair) -> CharacteristicPair:
    return CharacteristicPair.build(worked_problem, dirichlet_pair)


@pytest.fixture(scope="session")
def indicator_cp(indicator_problem, dirichlet_pair) -> CharacteristicPair:
    return CharacteristicPair.build(indicator_problem, dirichlet_pair)


@pytest.fixture(scope="session")
def worked_s() -> list[float]:
    return worked_roots(10)


@pytest.fixture(scope="session")
def gluing_eigenvalues() -> list[float]:
    return gluing_roots(5)

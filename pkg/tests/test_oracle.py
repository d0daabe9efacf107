import math

import numpy as np
import pytest
import scipy.sparse as sp

from sl_spectral.core.errors import DefectivePencilError, OracleError, OracleScopeError
from sl_spectral.services import oracle
from sl_spectral.services.nevpair import EntirePair
from sl_spectral.services.oracle import AffinePair, Pencil


def pencil(A, B) -> Pencil:
    return Pencil(sp.csr_matrix(np.asarray(A, dtype=float)), sp.csr_matrix(np.asarray(B, dtype=float)), len(A))


def test_bisect_root_examples(worked_s):
    assert worked_s[0] == pytest.approx(2.0287578, abs=1e-7)
    assert oracle.bisect_root(lambda x: x, -1.0, 1.0) == 0.0
    root = oracle.bisect_root(lambda lam: math.cos(math.sqrt(lam)), 2.0, 3.0, 1e-14)
    assert root == pytest.approx((math.pi / 2) ** 2, abs=1e-12)


def test_bisect_root_needs_sign_change():
    with pytest.raises(OracleError):
        oracle.bisect_root(lambda x: x * x + 1.0, -1.0, 1.0)


def test_three_point_dirichlet_pencil():
    h = 0.25
    A = (np.diag([2.0] * 3) - np.diag([1.0] * 2, 1) - np.diag([1.0] * 2, -1)) / h ** 2
    values = oracle.pencil_eigenvalues(pencil(A, np.eye(3)), (0.0, 1000.0))
    assert values[0] == pytest.approx((2.0 - math.sqrt(2.0)) * 16.0)
    assert len(values) == 3


def test_zero_stiffness_gives_zeros():
    assert oracle.pencil_eigenvalues(pencil(np.zeros((5, 5)), np.eye(5)), (-1.0, 1.0)) == [0.0] * 5


def test_singular_mass_filters_infinite_eigenvalue():
    values = oracle.pencil_eigenvalues(pencil(np.diag([1.0, 2.0, 3.0]), np.diag([1.0, 1.0, 0.0])), (-10.0, 10.0))
    assert values == [pytest.approx(1.0), pytest.approx(2.0)]


def test_defective_pencil_raises():
    with pytest.raises(DefectivePencilError):
        oracle.pencil_eigenvalues(pencil(np.diag([1.0, 0.0]), np.diag([1.0, 0.0])), (-10.0, 10.0))


def test_affine_coefficients(worked_pair, dirichlet_pair):
    assert oracle.affine_coefficients(worked_pair) == AffinePair(M0=0.0, N0=-1.0, M1=-1.0, N1=0.0)
    assert oracle.affine_coefficients(dirichlet_pair) == AffinePair(M0=1.0, N0=0.0, M1=0.0, N1=0.0)


@pytest.mark.parametrize("c0, c1", [("sin(lambda)", "1"), ("lambda^2", "-1"), ("lambda*sqrt(-1)", "1")])
def test_oracle_scope(c0, c1):
    with pytest.raises(OracleScopeError, match="oracle scope"):
        oracle.affine_coefficients(EntirePair.from_strings(c0, c1))


def test_discretize_rejects_out_of_scope_problems(halfline_problem, worked_problem, dirichlet_pair):
    with pytest.raises(OracleScopeError):
        oracle.discretize(halfline_problem, dirichlet_pair, 64)
    with pytest.raises(OracleError):
        oracle.discretize(worked_problem, dirichlet_pair, 8)


def test_pencil_shape(worked_problem, worked_pair):
    built = oracle.discretize(worked_problem, worked_pair, 32)
    assert built.size == 34
    assert built.A[32, 33] == -1.0
    assert built.Bm[33, 32] == -1.0
    assert built.A[33, 32] == 0.0
    assert abs(built.A - built.A.T).max() == 1.0


def test_coarse_pencil_tracks_worked_example(worked_problem, worked_pair, worked_s):
    values = oracle.oracle_eigenvalues(worked_problem, worked_pair, 256, (-1.0, 30.0))
    expected = [0.0, worked_s[0] ** 2, worked_s[1] ** 2]
    assert len(values) == 3
    np.testing.assert_allclose(values, expected, atol=1e-2)
    assert values[0] == pytest.approx(0.0, abs=1e-8)


def test_second_order_convergence(worked_problem, dirichlet_pair):
    ratio = oracle.convergence_ratio(worked_problem, dirichlet_pair, (math.pi / 2) ** 2, 64)
    assert 3.5 < ratio < 4.5


def test_compare_matching():
    result = oracle.compare([1.0, 2.0], [1.0004, 2.5, 3.0], (0.0, 2.7))
    assert result.matches == [{"engine": 1.0, "oracle": 1.0004, "gap": pytest.approx(4e-4)}]
    assert result.unmatched_engine == [2.0]
    assert result.unmatched_oracle == [2.5]
    assert not result.passed
    assert oracle.compare([1.0], [1.0002, 5.0], (0.0, 2.0)).passed


@pytest.mark.slow
def test_fine_pencil_matches_worked_example(worked_problem, worked_pair, worked_s):
    values = oracle.oracle_eigenvalues(worked_problem, worked_pair, 4096, (-1.0, 120.0))
    expected = [0.0] + [s * s for s in worked_s[:3]]
    result = oracle.compare(expected, values, (-1.0, 120.0))
    assert result.passed, result.to_dict()
    assert result.max_gap < 1e-3


@pytest.mark.slow
def test_fine_pencil_dirichlet(worked_problem, dirichlet_pair):
    values = oracle.oracle_eigenvalues(worked_problem, dirichlet_pair, 4096, (0.0, 10.0))
    assert values[0] == pytest.approx((math.pi / 2) ** 2, abs=1e-4)


@pytest.mark.slow
def test_fine_pencil_degenerate_weight(indicator_problem, dirichlet_pair, gluing_eigenvalues):
    values = oracle.oracle_eigenvalues(indicator_problem, dirichlet_pair, 4096, (-1.0, 120.0))
    expected = [t for t in gluing_eigenvalues if t <= 120.0]
    result = oracle.compare(expected, values, (-1.0, 120.0))
    assert result.passed, result.to_dict()

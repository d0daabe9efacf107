import math

import numpy as np
import pytest

from sl_spectral.core.errors import CoefficientError, ProblemError, TrivialWeightError
from sl_spectral.services import sl_core
from sl_spectral.services.sl_core import Coefficients, Problem, Regularity


def unit_problem(delta: str = "1", p: str = "1", q: str = "0") -> Problem:
    return Problem(a=0.0, b=1.0, coeffs=Coefficients.from_strings(p, q, delta), B=math.pi / 2)


def test_constant_solution_at_zero(worked_problem):
    traj = sl_core.integrate(worked_problem, 0.0, 1.0, 0.0)
    xs = np.linspace(0.0, 1.0, 11)
    y, y1 = traj(xs)
    np.testing.assert_allclose(y, 1.0, atol=1e-12)
    np.testing.assert_allclose(y1, 0.0, atol=1e-12)


def test_cosine_closed_form(worked_problem):
    traj = sl_core.integrate(worked_problem, 1.0, 1.0, 0.0)
    assert traj.y(1.0) == pytest.approx(math.cos(1.0), abs=1e-9)
    assert traj.quasi(1.0) == pytest.approx(-math.sin(1.0), abs=1e-9)


def test_complex_lambda_matches_closed_form(worked_problem):
    lam = 3.0 + 2.0j
    root = np.sqrt(lam)
    traj = sl_core.integrate(worked_problem, lam, 1.0, 0.0)
    assert abs(traj.y(0.7) - np.cos(0.7 * root)) < 1e-9


def test_indicator_weight_glues_to_a_line(indicator_problem):
    traj = sl_core.integrate(indicator_problem, 4.0, 1.0, 0.0)
    assert traj.y(0.25) == pytest.approx(math.cos(0.5), abs=1e-9)
    slope = -2.0 * math.sin(1.0)
    for x in (0.75, 1.0):
        assert traj.y(x) == pytest.approx(math.cos(1.0) + slope * (x - 0.5), abs=1e-9)
        assert traj.quasi(x) == pytest.approx(slope, abs=1e-9)


def test_breakpoints_are_mesh_knots(indicator_problem):
    assert indicator_problem.mesh_knots(1.0) == [0.5]
    assert indicator_problem.mesh_knots(0.5) == []


@pytest.mark.parametrize("lam", [0.0, 7.5, -3.0, 20.0 + 5.0j])
def test_wronskian_is_one(worked_problem, lam):
    phi, psi = sl_core.phi_psi(worked_problem, lam)
    xs = np.linspace(0.0, 1.0, 9)
    (f, f1), (g, g1) = phi(xs), psi(xs)
    np.testing.assert_allclose(f * g1 - f1 * g, 1.0, atol=1e-9)


def test_initial_values_follow_left_angle():
    (phi, phi1), (psi, psi1) = sl_core.initial_values(0.3)
    assert (phi, phi1) == (math.sin(0.3), -math.cos(0.3))
    assert (psi, psi1) == (math.cos(0.3), math.sin(0.3))
    assert phi * psi1 - phi1 * psi == pytest.approx(1.0)


def test_bundle_members_match_single_integrations(worked_problem):
    lams = [1.0, 9.0, 2.0 + 1.0j]
    phi_b, psi_b = sl_core.integrate_many(worked_problem, lams)
    assert phi_b.is_bundle and len(phi_b) == 3
    for i, lam in enumerate(lams):
        phi, psi = sl_core.phi_psi(worked_problem, lam)
        assert abs(phi_b.member(i).y(0.6) - phi.y(0.6)) < 1e-9
        assert abs(psi_b.member(i).quasi(0.6) - psi.quasi(0.6)) < 1e-9


def test_shoot_endpoint_values(worked_problem):
    lams = np.array([1.0, 4.0, 25.0])
    shot = sl_core.shoot(worked_problem, lams)
    roots = np.sqrt(lams)
    np.testing.assert_allclose(shot.phi, np.cos(roots), atol=1e-9)
    np.testing.assert_allclose(shot.psi, np.sin(roots) / roots, atol=1e-9)
    np.testing.assert_allclose(shot.phi1, -roots * np.sin(roots), atol=1e-8)
    np.testing.assert_allclose(shot.psi1, np.cos(roots), atol=1e-9)


def test_weighted_integrals():
    assert sl_core.inner_delta(unit_problem(), lambda x: 1.0 + 0 * x, lambda x: 1.0 + 0 * x) == pytest.approx(1.0)
    half = unit_problem("indicator(0, 0.5)")
    assert sl_core.inner_delta(half, lambda x: 1.0 + 0 * x, lambda x: 1.0 + 0 * x) == pytest.approx(0.5)


def test_norm_of_eigenfunction(worked_problem, worked_s):
    s = worked_s[0]
    phi, _ = sl_core.phi_psi(worked_problem, s * s)
    expected = 0.5 * (1.0 + math.sin(2.0 * s) / (2.0 * s))
    assert sl_core.norm_delta(worked_problem, phi) ** 2 == pytest.approx(expected, rel=1e-8)


def test_vector_integrand(worked_problem):
    values = sl_core.weighted_integral(worked_problem, lambda x: np.array([1.0 + 0 * x, x, x * x]))
    np.testing.assert_allclose(values.real, [1.0, 0.5, 1.0 / 3.0], rtol=1e-10)


def test_oscillation_length_counts_the_weighted_part(indicator_problem, worked_problem):
    assert sl_core.oscillation_length(worked_problem) == pytest.approx(1.0)
    assert sl_core.oscillation_length(indicator_problem) == pytest.approx(0.5)


def test_halfline_truncation(halfline_problem):
    b_prime = halfline_problem.truncation
    assert 32.0 <= b_prime <= 128.0
    phi0, psi0 = sl_core.zero_solutions(halfline_problem)
    assert phi0.y(b_prime) == pytest.approx(1.0, abs=1e-8)
    assert psi0.y(b_prime) == pytest.approx(b_prime, rel=1e-8)


def test_boundary_values_of_zero_solutions(halfline_problem):
    phi0, psi0 = sl_core.zero_solutions(halfline_problem)
    end = halfline_problem.truncation
    assert np.allclose(sl_core.boundary_values(halfline_problem, *phi0(end)), (1.0, 0.0), atol=1e-8)
    assert np.allclose(sl_core.boundary_values(halfline_problem, *psi0(end)), (0.0, 1.0), atol=1e-8)


def test_problem_rejects_bad_intervals():
    coeffs = Coefficients.from_strings()
    with pytest.raises(ProblemError):
        Problem(a=1.0, b=0.0, coeffs=coeffs)
    with pytest.raises(ProblemError):
        Problem(a=0.0, b=math.inf, coeffs=coeffs)
    with pytest.raises(ProblemError):
        Problem(a=-math.inf, b=0.0, coeffs=coeffs, regularity=Regularity.QUASIREGULAR)


def test_upto_outside_the_interval(worked_problem):
    with pytest.raises(ProblemError):
        sl_core.integrate(worked_problem, 1.0, 1.0, 0.0, upto=2.0)


def test_coefficient_report():
    assert sl_core.check_coefficients(unit_problem()).ok

    trivial = sl_core.check_coefficients(unit_problem("0"))
    assert not trivial.nontrivial_weight
    assert "trivial weight" in trivial.issues[0]

    negative = sl_core.check_coefficients(unit_problem("x - 0.5"))
    assert not negative.nonnegative_weight

    bad_p = sl_core.check_coefficients(unit_problem(p="x - 0.5"))
    assert not bad_p.positive_p
    assert bad_p.to_dict()["ok"] is False


def test_require_valid_coefficients():
    with pytest.raises(TrivialWeightError):
        sl_core.require_valid_coefficients(unit_problem("0"))
    with pytest.raises(CoefficientError):
        sl_core.require_valid_coefficients(unit_problem("x - 0.5"))
    sl_core.require_valid_coefficients(unit_problem("indicator(0, 0.5)"))


def test_sample_points_straddle_breakpoints(indicator_problem):
    xs = sl_core.sample_points(indicator_problem, count=8)
    assert np.any((xs < 0.5) & (xs > 0.5 - 1e-8))
    assert np.any((xs > 0.5) & (xs < 0.5 + 1e-8))

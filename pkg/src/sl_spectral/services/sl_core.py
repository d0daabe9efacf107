"""Sturm-Liouville problems and their fundamental solutions.

The equation -(p y')' + q y = lambda * Delta * y is integrated as the
first-order quasi-derivative system

    y'  = y1 / p
    y1' = (q - lambda * Delta) * y,        y1 = p * y'

with complex state, so every solution is an entire function of lambda.
Integration is piecewise between coefficient breakpoints (indicator edges)
and user knots, and the per-segment dense outputs are stitched into one
``scipy.integrate.OdeSolution``.

Many values of lambda can be integrated together: the state then holds one
column per lambda and the adaptive step control is shared, which is how the
spectrum scan and the expansion bundles stay cheap.
"""

import functools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import OdeSolution, quad_vec, solve_ivp

from sl_utils import config
from ..core import expr as ex
from ..core.errors import (
    CoefficientError,
    EvaluationError,
    IntegrationError,
    ProblemError,
    QuadratureError,
    StepSizeUnderflowError,
    TrivialWeightError,
)

logger = logging.getLogger(__name__)


class Regularity(StrEnum):
    REGULAR = "regular"
    QUASIREGULAR = "quasiregular"


@dataclass(frozen=True)
class Tolerances:
    """Per-problem numerical tolerances; defaults come from ``sl_utils.config``."""

    ode_rel: float = config.ODE_RTOL
    ode_abs: float = config.ODE_ATOL
    quad: float = config.QUAD_RTOL
    root: float = config.ROOT_TOL
    tail: float = config.TAIL_TOL


@dataclass(frozen=True)
class Coefficients:
    p: ex.Expr
    q: ex.Expr
    delta: ex.Expr

    @classmethod
    def from_strings(cls, p: str = "1", q: str = "0", delta: str = "1") -> "Coefficients":
        return cls(
            p=ex.parse(p, ex.Slot.COEFFICIENT),
            q=ex.parse(q, ex.Slot.COEFFICIENT),
            delta=ex.parse(delta, ex.Slot.COEFFICIENT),
        )

    @property
    def breakpoints(self) -> tuple[float, ...]:
        found = set(ex.breakpoints(self.p)) | set(ex.breakpoints(self.q)) | set(ex.breakpoints(self.delta))
        return tuple(sorted(found))

    def functions(self) -> tuple[Callable, Callable, Callable]:
        return ex.compile_real(self.p), ex.compile_real(self.q), ex.compile_real(self.delta)


@dataclass(frozen=True)
class Problem:
    """A Sturm-Liouville problem on [a, b> with left boundary angle B.

    The left condition is cos(B) y(a) + sin(B) y1(a) = 0. ``b`` may be
    ``math.inf`` for quasiregular half-lines; integrals then run to the
    truncation point chosen by :attr:`truncation`.
    """

    a: float
    b: float
    coeffs: Coefficients
    B: float = math.pi / 2
    regularity: Regularity = Regularity.REGULAR
    tolerances: Tolerances = field(default_factory=Tolerances)
    knots: tuple[float, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise ProblemError("left endpoint a must be finite")
        if not self.a < self.b:
            raise ProblemError(f"need a < b, got a={self.a}, b={self.b}")
        if self.regularity is Regularity.REGULAR and not math.isfinite(self.b):
            raise ProblemError("a regular problem needs a finite right endpoint")

    @functools.cached_property
    def truncation(self) -> float:
        """The right end b' of every integration and quadrature."""
        if math.isfinite(self.b):
            return float(self.b)
        return _find_truncation(self)

    def mesh_knots(self, upto: float) -> list[float]:
        """Breakpoints and user knots strictly inside (a, upto)."""
        candidates = set(self.coeffs.breakpoints) | set(self.knots)
        return sorted(x for x in candidates if self.a < x < upto)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Dense solution of the quasi-derivative system.

    A trajectory may be a bundle: ``rows`` is then an index array selecting
    several solutions from one shared ``OdeSolution`` and calls return one
    row per member.
    """

    lam: complex | np.ndarray
    solution: OdeSolution
    width: int
    rows: int | np.ndarray
    upto: float

    def __call__(self, x):
        """Return (y, y1) at x."""
        state = self.solution(np.asarray(x, dtype=float))
        return state[self.rows], state[self.width + self.rows]

    def y(self, x):
        return self(x)[0]

    def quasi(self, x):
        return self(x)[1]

    @property
    def nodes(self) -> np.ndarray:
        return np.asarray(self.solution.ts)

    @property
    def is_bundle(self) -> bool:
        return np.ndim(self.rows) > 0

    def __len__(self) -> int:
        return len(self.rows) if self.is_bundle else 1

    def member(self, i: int) -> "Trajectory":
        if not self.is_bundle:
            raise IndexError("not a bundle")
        return replace(self, lam=complex(self.lam[i]), rows=int(self.rows[i]))


class Shot(NamedTuple):
    """Fundamental solution values at the right end for a batch of lambdas."""

    phi: np.ndarray
    phi1: np.ndarray
    psi: np.ndarray
    psi1: np.ndarray


def initial_values(B: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """(phi(a), phi1(a)) and (psi(a), psi1(a)) for the left angle B."""
    return (math.sin(B), -math.cos(B)), (math.cos(B), math.sin(B))


# Integration ----------------------------------------------------------------

def _system(problem: Problem, lam_vec: np.ndarray) -> Callable:
    p_fn, q_fn, d_fn = problem.coeffs.functions()
    width = lam_vec.size

    def rhs(x, s):
        y, y1 = s[:width], s[width:]
        return np.concatenate((y1 / p_fn(x), (q_fn(x) - lam_vec * d_fn(x)) * y))

    return rhs


def _solve_segments(problem: Problem, rhs: Callable, s0: np.ndarray, upto: float, dense: bool):
    """Integrate from a to ``upto`` segment by segment.

    Returns the final state and, when ``dense``, the stitched OdeSolution.
    """
    tol = problem.tolerances
    edges = [problem.a, *problem.mesh_knots(upto), upto]
    ts, interpolants = [edges[0]], []
    state = np.asarray(s0, dtype=complex)

    for x0, x1 in zip(edges[:-1], edges[1:]):
        try:
            sol = solve_ivp(
                rhs, (x0, x1), state,
                method=config.ODE_METHOD, rtol=tol.ode_rel, atol=tol.ode_abs, dense_output=dense,
            )
        except EvaluationError as e:
            raise CoefficientError(f"coefficient evaluation failed on [{x0}, {x1}]: {e}") from e
        if sol.status == -1:
            raise StepSizeUnderflowError(float(sol.t[-1]), sol.message)
        state = sol.y[:, -1]
        if not np.all(np.isfinite(state)):
            raise IntegrationError(f"solution overflowed before x = {x1}")
        if dense:
            ts.extend(sol.sol.ts[1:])
            interpolants.extend(sol.sol.interpolants)

    return state, (OdeSolution(ts, interpolants) if dense else None)


def _check_upto(problem: Problem, upto: float | None) -> float:
    upto = problem.truncation if upto is None else float(upto)
    if not problem.a < upto <= problem.truncation:
        raise ProblemError(f"upto must lie in (a, b'], got {upto}")
    return upto


def integrate(problem: Problem, lam: complex, y0: complex, yp0: complex, upto: float | None = None) -> Trajectory:
    """Integrate one solution with (y(a), y1(a)) = (y0, yp0).

    Raises:
        StepSizeUnderflowError: with the x location where the step collapsed.
        CoefficientError: when a coefficient is not finite at a sampled x.
    """
    upto = _check_upto(problem, upto)
    lam_vec = np.array([lam], dtype=complex)
    _, solution = _solve_segments(problem, _system(problem, lam_vec), np.array([y0, yp0], dtype=complex), upto, dense=True)
    return Trajectory(lam=complex(lam), solution=solution, width=1, rows=0, upto=upto)


def integrate_many(problem: Problem, lams: Sequence[complex], upto: float | None = None) -> tuple[Trajectory, Trajectory]:
    """Dense bundles of phi_B(., lam) and psi_B(., lam) for every lam at once."""
    upto = _check_upto(problem, upto)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = lams.size
    (phi_a, phi1_a), (psi_a, psi1_a) = initial_values(problem.B)
    s0 = np.concatenate((np.full(n, phi_a), np.full(n, psi_a), np.full(n, phi1_a), np.full(n, psi1_a)))
    _, solution = _solve_segments(problem, _system(problem, np.concatenate((lams, lams))), s0, upto, dense=True)
    phi = Trajectory(lam=lams, solution=solution, width=2 * n, rows=np.arange(n), upto=upto)
    psi = Trajectory(lam=lams, solution=solution, width=2 * n, rows=np.arange(n, 2 * n), upto=upto)
    return phi, psi


def phi_psi(problem: Problem, lam: complex, upto: float | None = None) -> tuple[Trajectory, Trajectory]:
    """phi_B with data (sin B, -cos B) and psi_B with data (cos B, sin B)."""
    phi, psi = integrate_many(problem, [lam], upto)
    return phi.member(0), psi.member(0)


def shoot(problem: Problem, lams: Sequence[complex], upto: float | None = None) -> Shot:
    """Endpoint values of phi_B, psi_B and their quasi-derivatives for many lambdas."""
    upto = _check_upto(problem, upto)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = lams.size
    (phi_a, phi1_a), (psi_a, psi1_a) = initial_values(problem.B)
    s0 = np.concatenate((np.full(n, phi_a), np.full(n, psi_a), np.full(n, phi1_a), np.full(n, psi1_a)))
    end, _ = _solve_segments(problem, _system(problem, np.concatenate((lams, lams))), s0, upto, dense=False)
    return Shot(phi=end[:n], psi=end[n:2 * n], phi1=end[2 * n:3 * n], psi1=end[3 * n:])


def shoot_with_moments(problem: Problem, lams: Sequence[complex]) -> tuple[Shot, np.ndarray]:
    """Endpoint values plus the weighted moments against the lambda = 0 solutions.

    The moments are accumulated as extra ODE states:

        I1 = int psi0 Delta phi,  I2 = int psi0 Delta psi,
        I3 = int phi0 Delta phi,  I4 = int phi0 Delta psi,

    returned as an array of shape (4, len(lams)).
    """
    upto = problem.truncation
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = lams.size
    width = 2 * n + 2
    lam_vec = np.concatenate((lams, lams, [0.0, 0.0]))
    p_fn, q_fn, d_fn = problem.coeffs.functions()

    def rhs(x, s):
        y, y1 = s[:width], s[width:2 * width]
        d = d_fn(x)
        phi, psi, phi0, psi0 = y[:n], y[n:2 * n], y[2 * n], y[2 * n + 1]
        moments = d * np.concatenate((psi0 * phi, psi0 * psi, phi0 * phi, phi0 * psi))
        return np.concatenate((y1 / p_fn(x), (q_fn(x) - lam_vec * d) * y, moments))

    (phi_a, phi1_a), (psi_a, psi1_a) = initial_values(problem.B)
    s0 = np.concatenate((
        np.full(n, phi_a), np.full(n, psi_a), [phi_a, psi_a],
        np.full(n, phi1_a), np.full(n, psi1_a), [phi1_a, psi1_a],
        np.zeros(4 * n),
    ))
    end, _ = _solve_segments(problem, rhs, s0, upto, dense=False)
    shot = Shot(phi=end[:n], psi=end[n:2 * n], phi1=end[width:width + n], psi1=end[width + n:width + 2 * n])
    return shot, end[2 * width:].reshape(4, n)


@functools.lru_cache(maxsize=32)
def zero_solutions(problem: Problem) -> tuple[Trajectory, Trajectory]:
    """phi_B(., 0) and psi_B(., 0), integrated once per problem."""
    logger.debug(f"Integrating lambda = 0 solutions on [{problem.a}, {problem.truncation}]")
    return phi_psi(problem, 0.0)


def boundary_values(problem: Problem, y, y1):
    """Bracket boundary maps at the truncation point.

    Gamma0 y = psi0^[1] y - psi0 y^[1] and Gamma1 y = -phi0^[1] y + phi0 y^[1],
    with phi0, psi0 the lambda = 0 solutions. For phi_B(., lam) these give
    (Gamma0, Gamma1) = (w1, w3); for psi_B(., lam) they give (w2, w4).
    """
    phi0, psi0 = zero_solutions(problem)
    f0, f1 = phi0(problem.truncation)
    g0, g1 = psi0(problem.truncation)
    y, y1 = np.asarray(y), np.asarray(y1)
    return g1 * y - g0 * y1, -f1 * y + f0 * y1


def _find_truncation(problem: Problem) -> float:
    """Double b' until the tail of int Delta (|phi0|^2 + |psi0|^2) is negligible."""
    tol = problem.tolerances.tail
    p_fn, q_fn, d_fn = problem.coeffs.functions()
    (phi_a, phi1_a), (psi_a, psi1_a) = initial_values(problem.B)

    def rhs(x, s):
        y, y1 = s[:2], s[2:4]
        return np.concatenate((y1 / p_fn(x), q_fn(x) * y, [d_fn(x) * np.sum(np.abs(y) ** 2)]))

    s0 = np.array([phi_a, psi_a, phi1_a, psi1_a, 0.0], dtype=complex)
    length = config.TRUNCATION_INITIAL_LENGTH
    while length <= config.TRUNCATION_MAX_LENGTH:
        far = problem.a + 2 * length
        _, solution = _solve_segments(problem, rhs, s0, far, dense=True)
        near_mass = solution(problem.a + length)[4].real
        far_mass = solution(far)[4].real
        if far_mass - near_mass <= tol * (1.0 + far_mass):
            logger.info(f"Truncating [{problem.a}, inf) at b' = {far} (tail {far_mass - near_mass:.3e})")
            return far
        length *= 2
    raise IntegrationError(
        f"weighted tail did not settle before x = {problem.a + config.TRUNCATION_MAX_LENGTH}; "
        "the equation may not be quasiregular"
    )


# Quadrature -----------------------------------------------------------------

def weighted_integral(problem: Problem, integrand: Callable, upto: float | None = None):
    """int_a^upto Delta(x) * integrand(x) dx for scalar or vector, real or complex integrands.

    Raises:
        QuadratureError: if adaptive subdivision does not converge.
    """
    upto = _check_upto(problem, upto)
    d_fn = ex.compile_real(problem.coeffs.delta)
    sample = np.asarray(integrand(0.5 * (problem.a + upto)))

    def stacked(x):
        v = np.asarray(d_fn(x) * integrand(x), dtype=complex).ravel()
        return np.concatenate((v.real, v.imag))

    knots = problem.mesh_knots(upto)
    try:
        res, _, info = quad_vec(
            stacked, problem.a, upto,
            epsabs=config.QUAD_ATOL, epsrel=problem.tolerances.quad, limit=config.QUAD_LIMIT,
            points=knots or None, norm="max", full_output=True,
        )
    except EvaluationError as e:
        raise CoefficientError(f"integrand evaluation failed: {e}") from e
    if info.status != 0:
        raise QuadratureError(f"quadrature on [{problem.a}, {upto}] did not converge (status {info.status})")
    half = res.size // 2
    out = (res[:half] + 1j * res[half:]).reshape(sample.shape)
    return complex(out) if out.ndim == 0 else out


def _as_function(f) -> Callable:
    return f.y if isinstance(f, Trajectory) else f


def inner_delta(problem: Problem, f, g) -> complex:
    """(f, g)_Delta = int Delta f conj(g) over [a, b']."""
    fa, ga = _as_function(f), _as_function(g)
    return complex(weighted_integral(problem, lambda x: fa(x) * np.conj(ga(x))))


def norm_delta(problem: Problem, f) -> float:
    value = inner_delta(problem, f, f)
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        raise IntegrationError(f"||f||^2 has imaginary part {value.imag:.3e}")
    return math.sqrt(max(value.real, 0.0))


def oscillation_length(problem: Problem) -> float:
    """int sqrt(Delta / p) over [a, b'], the WKB phase per unit sqrt(lambda)."""
    p_fn, _, d_fn = problem.coeffs.functions()
    upto = problem.truncation
    res, _, info = quad_vec(
        lambda x: np.sqrt(max(d_fn(x) / p_fn(x), 0.0)), problem.a, upto,
        epsabs=1e-10, epsrel=1e-8, points=problem.mesh_knots(upto) or None, full_output=True,
    )
    if info.status != 0:
        raise QuadratureError("oscillation length quadrature did not converge")
    return float(res)


# Coefficient checks ---------------------------------------------------------

@dataclass
class CoefficientReport:
    positive_p: bool = True
    finite: bool = True
    nonnegative_weight: bool = True
    nontrivial_weight: bool = True
    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "positive_p": self.positive_p,
            "finite": self.finite,
            "nonnegative_weight": self.nonnegative_weight,
            "nontrivial_weight": self.nontrivial_weight,
            "issues": list(self.issues),
        }


def sample_points(problem: Problem, count: int = config.COEFFICIENT_SAMPLES) -> np.ndarray:
    """Cell midpoints of [a, b'] plus points just either side of every breakpoint."""
    upto = problem.truncation
    edges = np.linspace(problem.a, upto, count + 1)
    xs = [0.5 * (edges[:-1] + edges[1:])]
    for x in problem.mesh_knots(upto):
        eps = 1e-9 * max(1.0, abs(x))
        xs.append(np.array([x - eps, x + eps]))
    return np.unique(np.concatenate(xs))


def check_coefficients(problem: Problem) -> CoefficientReport:
    """Sample p, q, Delta: p > 0, everything finite, Delta >= 0 and not identically zero."""
    report = CoefficientReport()
    xs = sample_points(problem)
    p_fn, q_fn, d_fn = problem.coeffs.functions()
    values = {}
    for name, fn in (("p", p_fn), ("q", q_fn), ("Delta", d_fn)):
        try:
            values[name] = np.broadcast_to(fn(xs), xs.shape)
        except EvaluationError as e:
            report.finite = False
            report.issues.append(f"{name} is not finite on the sample mesh: {e}")
    if "p" in values and np.any(values["p"] <= 0):
        report.positive_p = False
        report.issues.append(f"p must be positive; min p = {values['p'].min():.6g}")
    if "Delta" in values:
        delta = values["Delta"]
        if np.any(delta < 0):
            report.nonnegative_weight = False
            report.issues.append(f"Delta must be nonnegative; min Delta = {delta.min():.6g}")
        if not np.any(delta > 0):
            report.nontrivial_weight = False
            report.issues.append("trivial weight: Delta vanishes at every sample point")
    return report


def require_valid_coefficients(problem: Problem) -> None:
    report = check_coefficients(problem)
    if not report.nontrivial_weight:
        raise TrivialWeightError(report.issues[-1])
    if not report.ok:
        raise CoefficientError("; ".join(report.issues))

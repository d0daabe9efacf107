"""Eigenfunction expansions: Fourier coefficients, terms, partial sums and convergence reports."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from sl_utils import config
from ..core import expr as ex
from ..core.errors import ExpansionError, MissingTargetDataError
from ..core.utils import format_csv
from . import sl_core
from .nevpair import CaseClassification, EtaRelation, eta_relation
from .sl_core import Problem, Regularity, Trajectory
from .spectrum import Eigenvalue

logger = logging.getLogger(__name__)


def _vectorized(fn: Callable) -> Callable:
    """Make a compiled expression return an array shaped like its argument."""
    def wrapped(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(fn(x), x.shape).astype(float)
    return wrapped


@dataclass(frozen=True, eq=False)
class TargetFunction:
    """The function y being expanded.

    ``y_quasi`` is y^[1] = p * y' and ``f_y`` satisfies -(y^[1])' + q y = Delta f_y;
    both are optional and only used by the uniform-convergence report.
    """

    y: Callable
    y_quasi: Callable | None = None
    f_y: Callable | None = None
    source: dict = field(default_factory=dict)

    @classmethod
    def from_exprs(cls, problem: Problem, y: str, dy: str | None = None, f_y: str | None = None) -> "TargetFunction":
        y_fn = _vectorized(ex.compile_real(ex.parse(y, ex.Slot.COEFFICIENT)))
        quasi = None
        if dy is not None:
            dy_fn = _vectorized(ex.compile_real(ex.parse(dy, ex.Slot.COEFFICIENT)))
            p_fn = _vectorized(ex.compile_real(problem.coeffs.p))
            quasi = lambda x: p_fn(x) * dy_fn(x)  # noqa: E731
        f_fn = _vectorized(ex.compile_real(ex.parse(f_y, ex.Slot.COEFFICIENT))) if f_y is not None else None
        source = {k: v for k, v in (("y", y), ("dy", dy), ("f_y", f_y)) if v is not None}
        return cls(y_fn, quasi, f_fn, source)


def _project(problem: Problem, phi: Trajectory, target: TargetFunction):
    return sl_core.weighted_integral(problem, lambda x: phi.y(x) * target.y(x)).real


def fourier_coefficient(problem: Problem, t_k: float, target: TargetFunction) -> float:
    """yhat_k = int phi_B(x, t_k) Delta(x) y(x) dx over [a, b']."""
    phi, _ = sl_core.phi_psi(problem, t_k)
    return float(_project(problem, phi, target))


@dataclass(frozen=True, eq=False)
class ExpansionTerm:
    k: int
    t_k: float
    xi_k: float
    yhat_k: float
    phi: Trajectory

    @property
    def coefficient(self) -> float:
        return self.xi_k * self.yhat_k

    def __call__(self, x):
        """y_k(x) = xi_k * yhat_k * phi_B(x, t_k)."""
        return self.coefficient * np.real(self.phi.y(x))

    def quasi(self, x):
        return self.coefficient * np.real(self.phi.quasi(x))

    def to_dict(self) -> dict:
        return {"k": self.k, "t": self.t_k, "xi": self.xi_k, "yhat": self.yhat_k, "b": self.coefficient}


def eigenfunction_term(problem: Problem, eig: Eigenvalue, target: TargetFunction, k: int = 0) -> ExpansionTerm:
    phi, _ = sl_core.phi_psi(problem, eig.t)
    yhat = float(_project(problem, phi, target))
    return ExpansionTerm(k, eig.t, eig.residue_xi, yhat, phi)


def expansion_terms(problem: Problem, eigenvalues: Sequence[Eigenvalue], target: TargetFunction) -> list[ExpansionTerm]:
    """All terms at once: phi_B bundles per chunk of eigenvalues, one vector quadrature per bundle."""
    eigenvalues = list(eigenvalues)
    terms = []
    for start in range(0, len(eigenvalues), config.SCAN_CHUNK_SIZE):
        chunk = eigenvalues[start:start + config.SCAN_CHUNK_SIZE]
        bundle, _ = sl_core.integrate_many(problem, [e.t for e in chunk])
        yhat = np.atleast_1d(_project(problem, bundle, target))
        for i, (eig, value) in enumerate(zip(chunk, yhat)):
            terms.append(ExpansionTerm(start + i, eig.t, eig.residue_xi, float(value), bundle.member(i)))
    logger.info(f"Computed {len(terms)} expansion terms")
    return terms


class PartialSum:
    """x -> sum of the given terms; terms sharing a bundle are evaluated together."""

    def __init__(self, terms: Sequence[ExpansionTerm]):
        self.terms = list(terms)

    def __len__(self) -> int:
        return len(self.terms)

    def term_values(self, x, quasi: bool = False) -> np.ndarray:
        """Array of shape (len(terms), *shape(x)) with y_k(x) (or y_k^[1](x))."""
        x = np.asarray(x, dtype=float)
        out = np.zeros((len(self.terms),) + x.shape)
        groups: dict[int, list[int]] = {}
        for i, term in enumerate(self.terms):
            groups.setdefault(id(term.phi.solution), []).append(i)
        for indices in groups.values():
            first = self.terms[indices[0]].phi
            state = first.solution(x)
            offset = first.width if quasi else 0
            for i in indices:
                term = self.terms[i]
                out[i] = term.coefficient * np.real(state[offset + term.phi.rows])
        return out

    def __call__(self, x):
        return self.term_values(x).sum(axis=0)

    def quasi(self, x):
        return self.term_values(x, quasi=True).sum(axis=0)


def partial_sum(terms: Sequence[ExpansionTerm], K: int) -> PartialSum:
    if K < 0 or K > len(terms):
        raise ExpansionError(f"K = {K} outside 0..{len(terms)}")
    return PartialSum(terms[:K])


def _cumulative(values: np.ndarray, Ks: Sequence[int]) -> list[np.ndarray]:
    """S_K for each K from stacked term values (axis 0 is the term index)."""
    running = np.cumsum(values, axis=0)
    zero = np.zeros(values.shape[1:])
    return [running[K - 1] if K > 0 else zero for K in Ks]


def _check_Ks(terms: Sequence[ExpansionTerm], Ks: Sequence[int]) -> list[int]:
    Ks = [int(K) for K in Ks]
    for K in Ks:
        if K < 0 or K > len(terms):
            raise ExpansionError(f"K = {K} outside 0..{len(terms)}")
    return Ks


# L2_Delta report ------------------------------------------------------------

@dataclass
class L2Row:
    K: int
    residual: float
    parseval_defect: float
    bessel_sum: float


@dataclass
class L2Report:
    norm_y: float
    rows: list[L2Row]
    bessel_ok: bool

    def to_dict(self) -> dict:
        return {
            "norm_y_delta": self.norm_y,
            "bessel_ok": self.bessel_ok,
            "rows": [
                {"K": r.K, "residual": r.residual, "parseval_defect": r.parseval_defect, "bessel_sum": r.bessel_sum}
                for r in self.rows
            ],
        }


def l2_report(problem: Problem, target: TargetFunction, terms: Sequence[ExpansionTerm], Ks: Sequence[int]) -> L2Report:
    """Residuals ||y - S_K||_Delta and Parseval defects |  ||y||^2 - sum xi_k yhat_k^2 |.

    Residuals are in the Delta-seminorm; nothing is claimed off supp Delta.
    """
    Ks = _check_Ks(terms, Ks)
    series = PartialSum(terms)

    def integrand(x):
        y = target.y(x)
        sums = _cumulative(series.term_values(x), Ks)
        return np.array([(y - s) ** 2 for s in sums] + [y * y])

    values = np.atleast_1d(sl_core.weighted_integral(problem, integrand)).real
    norm2 = max(float(values[-1]), 0.0)
    energy = np.cumsum([t.xi_k * t.yhat_k ** 2 for t in terms]) if terms else np.zeros(0)

    rows = []
    bessel_ok = True
    for K, sq in zip(Ks, values[:-1]):
        partial = float(energy[K - 1]) if K > 0 else 0.0
        bessel_ok &= partial <= norm2 * (1.0 + config.BESSEL_SLACK) + config.QUAD_ATOL
        rows.append(L2Row(K, float(np.sqrt(max(sq, 0.0))), abs(norm2 - partial), partial))
    if not bessel_ok:
        logger.warning("Bessel inequality violated beyond slack; check eigenvalue completeness")
    return L2Report(float(np.sqrt(norm2)), rows, bool(bessel_ok))


# Uniform convergence --------------------------------------------------------

@dataclass
class Eligibility:
    eligible: bool
    left_defect: float
    right_defects: list[float]
    f_y_residual: float
    f_y_derived: bool = False
    y_quasi_approximated: bool = False
    reasons: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "eligible": self.eligible,
            "left_defect": self.left_defect,
            "right_defects": list(self.right_defects),
            "f_y_residual": self.f_y_residual,
            "f_y_derived": self.f_y_derived,
            "y_quasi_approximated": self.y_quasi_approximated,
            "reasons": list(self.reasons),
        }


@dataclass
class UniformRow:
    K: int
    sup_residual: float
    sup_residual_quasi: float


@dataclass
class UniformReport:
    eligibility: Eligibility
    eta: EtaRelation
    rows: list[UniformRow]
    grid_points: int

    @property
    def verdict(self) -> str:
        return "uniform convergence guaranteed" if self.eligibility.eligible else "no uniform-convergence guarantee"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "eta": self.eta.to_dict(),
            "eligibility": self.eligibility.to_dict(),
            "grid_points": self.grid_points,
            "rows": [{"K": r.K, "sup_residual": r.sup_residual, "sup_residual_quasi": r.sup_residual_quasi} for r in self.rows],
        }


def report_grid(problem: Problem, points: int = config.UNIFORM_GRID_POINTS) -> np.ndarray:
    """Equispaced points on [a, b'] plus every coefficient breakpoint."""
    upto = problem.truncation
    return np.unique(np.concatenate((np.linspace(problem.a, upto, points), problem.mesh_knots(upto))))


def _fd_mesh(problem: Problem) -> np.ndarray:
    return np.linspace(problem.a, problem.truncation, config.FD_MESH_POINTS)


def _resolve_quasi(problem: Problem, target: TargetFunction, allow_fd: bool) -> tuple[Callable, bool]:
    if target.y_quasi is not None:
        return target.y_quasi, False
    if not allow_fd:
        raise MissingTargetDataError("y_quasi (or dy) is required when finite differences are disabled")
    logger.warning("Target has no derivative; approximating y^[1] = p y' by central differences")
    xs = _fd_mesh(problem)
    p_fn = _vectorized(ex.compile_real(problem.coeffs.p))
    y1 = p_fn(xs) * np.gradient(target.y(xs), xs, edge_order=2)
    return (lambda x: np.interp(x, xs, y1)), True


def _membership_residual(problem: Problem, target: TargetFunction, quasi: Callable, allow_fd: bool) -> tuple[float, float, bool]:
    """(residual, tolerance, derived) for -(y^[1])' + q y = Delta f_y on the finite-difference mesh."""
    if target.f_y is None and not allow_fd:
        raise MissingTargetDataError("f_y is required when finite differences are disabled")
    xs = _fd_mesh(problem)
    h = xs[1] - xs[0]
    keep = np.ones(xs.size, dtype=bool)
    for x in problem.mesh_knots(problem.truncation):
        keep &= np.abs(xs - x) > 2.5 * h

    _, q_fn, d_fn = (_vectorized(f) for f in problem.coeffs.functions())
    ly = -np.gradient(quasi(xs), xs, edge_order=2) + q_fn(xs) * target.y(xs)
    delta = d_fn(xs)
    if target.f_y is not None:
        rhs = delta * target.f_y(xs)
        residual = float(np.max(np.abs(ly - rhs)[keep], initial=0.0))
        return residual, config.FY_RESIDUAL_TOL * (1.0 + float(np.max(np.abs(rhs)))), False

    # without f_y, l[y] must vanish where Delta does
    null = keep & (delta == 0)
    residual = float(np.max(np.abs(ly[null]), initial=0.0))
    return residual, config.FY_RESIDUAL_TOL * (1.0 + float(np.max(np.abs(ly[keep]), initial=0.0))), True


def check_eligibility(problem: Problem, eta: EtaRelation, target: TargetFunction, allow_finite_differences: bool = True) -> Eligibility:
    """Left condition, the eta relation at b' and membership of y in the maximal domain."""
    quasi, approximated = _resolve_quasi(problem, target, allow_finite_differences)
    return _eligibility(problem, eta, target, quasi, approximated, allow_finite_differences)


def _eligibility(problem, eta, target, quasi, approximated, allow_fd) -> Eligibility:
    reasons = []

    a, upto = problem.a, problem.truncation
    ya, y1a = float(target.y(a)), float(quasi(a))
    left = abs(np.cos(problem.B) * ya + np.sin(problem.B) * y1a)
    if left > config.BOUNDARY_CONDITION_TOL * (1.0 + abs(ya) + abs(y1a)):
        reasons.append(f"left condition cos(B) y(a) + sin(B) y1(a) = {left:.3e}")

    yb, y1b = float(target.y(upto)), float(quasi(upto))
    if problem.regularity is Regularity.REGULAR:
        g0, g1 = yb, y1b
    else:
        g0, g1 = (complex(v).real for v in sl_core.boundary_values(problem, yb, y1b))
    right = [abs(d) for d in eta.defects(g0, g1)]
    if max(right) > config.BOUNDARY_CONDITION_TOL * (1.0 + abs(g0) + abs(g1)):
        reasons.append(f"right relation {eta.describe()} violated by {max(right):.3e}")

    residual, tol, derived = _membership_residual(problem, target, quasi, allow_fd)
    if residual > tol:
        what = "l[y] does not vanish where Delta = 0" if derived else "-(y^[1])' + q y != Delta f_y"
        reasons.append(f"{what} (residual {residual:.3e} > {tol:.3e})")

    return Eligibility(
        eligible=not reasons, left_defect=float(left), right_defects=[float(r) for r in right],
        f_y_residual=residual, f_y_derived=derived, y_quasi_approximated=approximated, reasons=reasons,
    )


def uniform_report(
    problem: Problem,
    classification: CaseClassification,
    target: TargetFunction,
    terms: Sequence[ExpansionTerm],
    Ks: Sequence[int],
    grid: int = config.UNIFORM_GRID_POINTS,
    allow_finite_differences: bool = True,
) -> UniformReport:
    """Sup-norm residuals of S_K and S_K^[1] on the report grid, with the eligibility verdict.

    An ineligible target still gets its residual table.

    Raises:
        MissingTargetDataError: if derivative data is missing and finite differences are disallowed.
    """
    Ks = _check_Ks(terms, Ks)
    eta = eta_relation(classification)
    quasi, approximated = _resolve_quasi(problem, target, allow_finite_differences)
    eligibility = _eligibility(problem, eta, target, quasi, approximated, allow_finite_differences)

    xs = report_grid(problem, grid)
    series = PartialSum(terms)
    y, y1 = target.y(xs), quasi(xs)
    sums = _cumulative(series.term_values(xs), Ks)
    quasi_sums = _cumulative(series.term_values(xs, quasi=True), Ks)
    rows = [
        UniformRow(K, float(np.max(np.abs(y - s))), float(np.max(np.abs(y1 - s1))))
        for K, s, s1 in zip(Ks, sums, quasi_sums)
    ]
    logger.info(f"Uniform report on {xs.size} points: {'eligible' if eligibility.eligible else 'ineligible'}")
    return UniformReport(eligibility, eta, rows, int(xs.size))


def series_csv(problem: Problem, target: TargetFunction, terms: Sequence[ExpansionTerm], K: int,
               points: int = config.UNIFORM_GRID_POINTS) -> str:
    """CSV with columns x, y, S_K and y_0 .. y_{K-1} on the report grid."""
    chosen = partial_sum(terms, K)
    xs = report_grid(problem, points)
    values = chosen.term_values(xs)
    header = ["x", "y", f"S_{K}"] + [f"y_{t.k}" for t in chosen.terms]
    columns = [xs, target.y(xs), values.sum(axis=0), *values]
    return format_csv(header, zip(*columns))

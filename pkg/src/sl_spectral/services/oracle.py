"""Brute-force eigenvalue oracles used to check the shooting engine.

Two independent routes: bisection on closed-form transcendental equations,
and a finite-element matrix pencil A v = lambda B v for problems whose right
condition is affine in lambda, (M0 - lambda N0) y(b) + (M1 - lambda N1) y1(b) = 0.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigs, splu

from sl_utils import config
from ..core.errors import DefectivePencilError, EvaluationError, OracleError, OracleScopeError
from .nevpair import EntirePair
from .sl_core import Problem, Regularity

logger = logging.getLogger(__name__)


def bisect_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of f in [lo, hi] by plain bisection.

    Raises:
        OracleError: if f(lo) and f(hi) have the same sign.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if f_lo * f_hi > 0:
        raise OracleError(f"no sign change on [{lo}, {hi}]: f = {f_lo!r}, {f_hi!r}")
    for _ in range(400):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# Pencil ---------------------------------------------------------------------

@dataclass(frozen=True)
class AffinePair:
    """C0 = M0 - lambda N0, C1 = M1 - lambda N1."""

    M0: float
    N0: float
    M1: float
    N1: float


def affine_coefficients(pair: EntirePair) -> AffinePair:
    """Read off M0, N0, M1, N1 and confirm the pair is affine in lambda.

    Raises:
        OracleScopeError: if either entry is not affine (checked at lambda = 2 and a complex point).
    """
    samples = np.array([0.0, 1.0, 2.0, 0.5 + 0.7j])
    try:
        c0, c1 = pair.evaluate(samples)
    except EvaluationError as e:
        raise OracleScopeError(f"oracle scope: pair cannot be evaluated ({e})") from e
    for name, c in (("C0", c0), ("C1", c1)):
        predicted = c[0] + samples[2:] * (c[1] - c[0])
        scale = 1.0 + np.max(np.abs(c))
        if np.max(np.abs(predicted - c[2:])) > 1e-10 * scale:
            raise OracleScopeError(f"oracle scope: {name} is not affine in lambda")
        if np.max(np.abs(c[:2].imag)) > 1e-12 * scale:
            raise OracleScopeError(f"oracle scope: {name} is not real")
    return AffinePair(
        M0=float(c0[0].real), N0=float(-(c0[1] - c0[0]).real),
        M1=float(c1[0].real), N1=float(-(c1[1] - c1[0]).real),
    )


@dataclass
class Pencil:
    A: sp.csr_matrix
    Bm: sp.csr_matrix
    n: int

    @property
    def size(self) -> int:
        return self.A.shape[0]


def discretize(problem: Problem, pair: EntirePair, n: int) -> Pencil:
    """Lumped-mass linear elements on n cells plus the companion unknown w = y1(b).

    Unknowns are y_0 .. y_n and w. p, q and Delta are sampled at cell
    midpoints; q and Delta are lumped to the nodes. The left condition enters
    row 0 (or pins y_0 when sin B = 0) and the last row carries
    M0 y_n + M1 w = lambda (N0 y_n + N1 w). The pencil is not symmetric: w
    enters row n with coefficient -1 while the companion row holds the pair
    coefficients, so eigenvalues come from a general (non-Hermitian) solver.
    """
    if n < config.ORACLE_MIN_GRID:
        raise OracleError(f"grid must have at least {config.ORACLE_MIN_GRID} cells, got {n}")
    if problem.regularity is not Regularity.REGULAR:
        raise OracleScopeError("oracle scope: only regular problems are discretized")
    coeff = affine_coefficients(pair)

    h = (problem.b - problem.a) / n
    mid = problem.a + h * (np.arange(n) + 0.5)
    p_fn, q_fn, d_fn = problem.coeffs.functions()
    p = np.broadcast_to(p_fn(mid), mid.shape)
    q = np.broadcast_to(q_fn(mid), mid.shape)
    d = np.broadcast_to(d_fn(mid), mid.shape)

    main = np.zeros(n + 2)
    main[:n] += p / h
    main[1:n + 1] += p / h
    main[:n] += 0.5 * h * q
    main[1:n + 1] += 0.5 * h * q
    mass = np.zeros(n + 2)
    mass[:n] += 0.5 * h * d
    mass[1:n + 1] += 0.5 * h * d

    A = sp.lil_matrix((n + 2, n + 2))
    A.setdiag(main)
    A.setdiag(np.append(-p / h, 0.0), 1)
    A.setdiag(np.append(-p / h, 0.0), -1)
    B = sp.lil_matrix((n + 2, n + 2))
    B.setdiag(mass)

    sin_b, cos_b = math.sin(problem.B), math.cos(problem.B)
    if abs(sin_b) < 1e-14:
        A[0, :] = 0.0
        A[0, 0] = 1.0
        B[0, 0] = 0.0
    else:
        A[0, 0] += -cos_b / sin_b

    A[n, n + 1] = -1.0
    A[n + 1, :] = 0.0
    A[n + 1, n], A[n + 1, n + 1] = coeff.M0, coeff.M1
    B[n + 1, n], B[n + 1, n + 1] = coeff.N0, coeff.N1
    return Pencil(A.tocsr(), B.tocsr(), n)


def _in_window(values: np.ndarray, window) -> list[float]:
    lo, hi = window
    keep = (values.real >= lo) & (values.real <= hi) & (np.abs(values.imag) <= 1e-6 * np.maximum(1.0, np.abs(values.real)))
    return sorted(float(v) for v in values.real[keep])


def _dense_eigenvalues(pencil: Pencil, window) -> list[float]:
    A, B = pencil.A.toarray(), pencil.Bm.toarray()
    alpha, beta = scipy.linalg.eig(A, B, right=False, homogeneous_eigvals=True)
    scale = max(1.0, np.abs(A).max(), np.abs(B).max())
    if np.any((np.abs(alpha) <= 1e-12 * scale) & (np.abs(beta) <= 1e-12 * scale)):
        raise DefectivePencilError("pencil is singular: alpha and beta vanish together")
    finite = np.abs(beta) > config.ORACLE_INFINITE_BETA_TOL * np.abs(alpha)
    logger.debug(f"Dense QZ: {np.count_nonzero(~finite)} infinite eigenvalues filtered")
    return _in_window(alpha[finite] / beta[finite], window)


def _sparse_eigenvalues(pencil: Pencil, window) -> list[float]:
    """Shift-invert Arnoldi on (A - sigma B)^-1 B; infinite eigenvalues map to 0."""
    lo, hi = window
    sigma = lo - 1.0
    lu = splu((pencil.A - sigma * pencil.Bm).tocsc())
    op = LinearOperator(pencil.A.shape, matvec=lambda v: lu.solve(pencil.Bm @ v), dtype=float)
    k = 16
    while True:
        k = min(k, pencil.size - 2)
        mu = eigs(op, k=k, which="LM", v0=np.ones(pencil.size), return_eigenvectors=False)
        mu = mu[np.abs(mu) > 1e-14]
        values = sigma + 1.0 / mu
        if np.max(np.abs(values - sigma), initial=0.0) >= hi - sigma or k >= pencil.size - 2 or mu.size < k:
            return _in_window(values, window)
        k *= 2


def pencil_eigenvalues(pencil: Pencil, window) -> list[float]:
    """Finite real generalized eigenvalues in window.

    Raises:
        DefectivePencilError: if alpha and beta vanish together.
    """
    if pencil.size <= config.ORACLE_DENSE_LIMIT:
        return _dense_eigenvalues(pencil, window)
    try:
        return _sparse_eigenvalues(pencil, window)
    except (ArpackError, ArpackNoConvergence, RuntimeError) as e:
        logger.warning(f"Sparse eigensolver failed ({e}); falling back to dense QZ")
        return _dense_eigenvalues(pencil, window)


# Comparison -----------------------------------------------------------------

@dataclass
class OracleComparison:
    matches: list[dict]
    unmatched_engine: list[float] = field(default_factory=list)
    unmatched_oracle: list[float] = field(default_factory=list)
    tol: float = config.ORACLE_MATCH_TOL

    @property
    def max_gap(self) -> float:
        return max((m["gap"] for m in self.matches), default=0.0)

    @property
    def passed(self) -> bool:
        return not self.unmatched_engine and not self.unmatched_oracle and self.max_gap <= self.tol

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_gap": self.max_gap,
            "tolerance": self.tol,
            "matches": list(self.matches),
            "unmatched_engine": list(self.unmatched_engine),
            "unmatched_oracle": list(self.unmatched_oracle),
        }


def compare(engine: Sequence[float], oracle: Sequence[float], window, tol: float = config.ORACLE_MATCH_TOL) -> OracleComparison:
    """Bijective nearest-neighbour matching of engine and oracle eigenvalues.

    ``oracle`` may come from a slightly wider window; oracle values outside
    [lo, hi] only count when an engine value claims them.
    """
    lo, hi = window
    engine = sorted(float(t) for t in engine)
    oracle = sorted(float(t) for t in oracle)
    claimed: dict[int, int] = {}
    unmatched_engine = []
    for i, t in enumerate(engine):
        if not oracle:
            unmatched_engine.append(t)
            continue
        j = int(np.argmin([abs(t - s) for s in oracle]))
        if j in claimed or abs(t - oracle[j]) > tol:
            unmatched_engine.append(t)
        else:
            claimed[j] = i
    matches = [{"engine": engine[i], "oracle": oracle[j], "gap": abs(engine[i] - oracle[j])} for j, i in sorted(claimed.items())]
    unmatched_oracle = [s for j, s in enumerate(oracle) if j not in claimed and lo <= s <= hi]
    return OracleComparison(matches, unmatched_engine, unmatched_oracle, tol)


def oracle_eigenvalues(problem: Problem, pair: EntirePair, n: int, window) -> list[float]:
    """Pencil eigenvalues on window widened by the match tolerance."""
    lo, hi = window
    pad = 2.0 * config.ORACLE_MATCH_TOL * max(1.0, abs(lo), abs(hi))
    return pencil_eigenvalues(discretize(problem, pair, n), (lo - pad, hi + pad))


def convergence_ratio(problem: Problem, pair: EntirePair, reference: float, n: int) -> float:
    """|lambda_n - ref| / |lambda_2n - ref| for the pencil eigenvalue nearest ref; about 4 for second order."""
    window = (reference - 1.0, reference + 1.0)
    errors = []
    for cells in (n, 2 * n):
        values = pencil_eigenvalues(discretize(problem, pair, cells), window)
        if not values:
            raise OracleError(f"no pencil eigenvalue near {reference} at n = {cells}")
        errors.append(min(abs(v - reference) for v in values))
    return errors[0] / errors[1]

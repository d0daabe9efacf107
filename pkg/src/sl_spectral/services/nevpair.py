"""Entire Nevanlinna pairs (C0, C1) describing the lambda-dependent right boundary condition.

The condition reads C0(lambda) * Gamma0 y + C1(lambda) * Gamma1 y = 0. With
tau = -C0 / C1 the behaviour of tau along the imaginary axis decides which
limiting relation eta_C a function must satisfy at b for its eigenfunction
expansion to converge uniformly.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from sl_utils import config
from ..core import expr as ex
from ..core.errors import EvaluationError, NonConvergentLimitError, PairError

logger = logging.getLogger(__name__)


class PointAtInfinity:
    """Value of tau where C1 vanishes."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"


INFINITY = PointAtInfinity()


@dataclass(frozen=True)
class EntirePair:
    C0: ex.Expr
    C1: ex.Expr
    realness: bool | None = field(default=None, compare=False)

    @classmethod
    def from_strings(cls, c0: str, c1: str) -> "EntirePair":
        return cls(ex.parse(c0, ex.Slot.PAIR), ex.parse(c1, ex.Slot.PAIR))

    @classmethod
    def constant(cls, angle: float) -> "EntirePair":
        """The self-adjoint constant pair (cos B1, sin B1)."""
        return cls(ex.Num(math.cos(angle)), ex.Num(math.sin(angle)))

    def evaluate(self, lams):
        """(C0, C1) at lams, broadcast to the shape of lams."""
        lams = np.asarray(lams, dtype=complex)
        c0 = np.broadcast_to(ex.eval_complex(self.C0, lams), lams.shape)
        c1 = np.broadcast_to(ex.eval_complex(self.C1, lams), lams.shape)
        return c0, c1

    def describe(self) -> dict:
        return {"C0": ex.to_source(self.C0), "C1": ex.to_source(self.C1)}


# Validation -----------------------------------------------------------------

@dataclass(frozen=True)
class SamplingPlan:
    radii: tuple[float, ...] = tuple(np.geomspace(0.1, 100.0, 12))
    angles: tuple[float, ...] = tuple(np.linspace(0.05 * math.pi, 0.95 * math.pi, 9))
    real_segment: tuple[float, ...] = tuple(np.linspace(-50.0, 50.0, 101))

    def upper(self) -> np.ndarray:
        r, theta = np.meshgrid(self.radii, self.angles, indexing="ij")
        return (r * np.exp(1j * theta)).ravel()

    def points(self) -> np.ndarray:
        """Upper half-plane points, their conjugates, and the real segment."""
        up = self.upper()
        return np.concatenate((up, up.conj(), np.asarray(self.real_segment, dtype=complex)))


DEFAULT_PLAN = SamplingPlan()


@dataclass
class ValidationReport:
    passed: bool
    violations: dict[str, float]
    failures: list[str]
    realness: bool
    samples: int
    messages: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": dict(self.violations),
            "failures": list(self.failures),
            "realness": self.realness,
            "samples": self.samples,
            "messages": list(self.messages),
        }


_CONDITION_TEXT = {
    "no_common_zeros": "|C0(lambda)| + |C1(lambda)| > 0",
    "nevanlinna_sign": "Im(lambda) * Im(C1(lambda) * conj(C0(lambda))) >= 0",
    "conjugate_symmetry": "C1(conj lambda) * conj(C0(lambda)) = conj(C1(lambda)) * C0(conj lambda)",
}


def validate_pair(pair: EntirePair, plan: SamplingPlan = DEFAULT_PLAN, tol: float = config.PAIR_VALIDATION_TOL) -> ValidationReport:
    """Check the entire-Nevanlinna-pair conditions on a sampling plan.

    Violations are scaled by |C0|^2 + |C1|^2 (or the matching product of
    norms) so the verdict does not depend on the overall size of the pair.
    The report carries failures instead of raising.
    """
    up = plan.upper()
    real = np.asarray(plan.real_segment, dtype=complex)
    samples = 2 * up.size + real.size
    try:
        c0_up, c1_up = pair.evaluate(up)
        c0_dn, c1_dn = pair.evaluate(up.conj())
        c0_re, c1_re = pair.evaluate(real)
    except EvaluationError as e:
        return ValidationReport(
            passed=False, violations={}, failures=["evaluation"], realness=False,
            samples=samples, messages=[f"pair could not be evaluated on the sampling plan: {e}"],
        )

    all_c0 = np.concatenate((c0_up, c0_dn, c0_re))
    all_c1 = np.concatenate((c1_up, c1_dn, c1_re))
    common = float(np.min(np.abs(all_c0) + np.abs(all_c1)))

    def sign_violation(lams, c0, c1):
        scale = np.abs(c0) ** 2 + np.abs(c1) ** 2
        signed = np.sign(lams.imag) * np.imag(c1 * np.conj(c0)) / scale
        return float(np.max(np.maximum(-signed, 0.0)))

    sign = max(sign_violation(up, c0_up, c1_up), sign_violation(up.conj(), c0_dn, c1_dn))

    sym_num = c1_dn * np.conj(c0_up) - np.conj(c1_up) * c0_dn
    sym_scale = np.hypot(np.abs(c0_up), np.abs(c1_up)) * np.hypot(np.abs(c0_dn), np.abs(c1_dn))
    symmetry = float(np.max(np.abs(sym_num) / sym_scale))

    re_scale = np.abs(c0_re) + np.abs(c1_re)
    realness_defect = float(np.max((np.abs(c0_re.imag) + np.abs(c1_re.imag)) / re_scale))

    violations = {
        "no_common_zeros": max(0.0, tol - common),
        "nevanlinna_sign": sign,
        "conjugate_symmetry": symmetry,
    }
    failures = [name for name, v in violations.items() if v > tol]
    messages = [f"violated: {_CONDITION_TEXT[name]} (worst scaled violation {violations[name]:.3e})" for name in failures]
    report = ValidationReport(
        passed=not failures,
        violations=violations,
        failures=failures,
        realness=realness_defect <= tol,
        samples=samples,
        messages=messages,
    )
    logger.info(f"Pair validation: passed={report.passed}, realness={report.realness}")
    return report


def is_real_on_axis(pair: EntirePair, plan: SamplingPlan = DEFAULT_PLAN, tol: float = config.PAIR_VALIDATION_TOL) -> bool:
    if pair.realness is not None:
        return pair.realness
    c0, c1 = pair.evaluate(np.asarray(plan.real_segment, dtype=complex))
    defect = (np.abs(c0.imag) + np.abs(c1.imag)) / (np.abs(c0) + np.abs(c1))
    return bool(np.max(defect) <= tol)


# tau and the behaviour at infinity ------------------------------------------

def tau(pair: EntirePair, lam: complex):
    """-C0(lam) / C1(lam), or INFINITY where C1 vanishes."""
    c0, c1 = pair.evaluate(lam)
    if complex(c1) == 0:
        return INFINITY
    return complex(-c0 / c1)


class Case(StrEnum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"
    DEGENERATE = "DegeneratePair"


@dataclass(frozen=True)
class CaseClassification:
    case: Case
    B_inf: float
    Dhat_inf: float
    D_inf: float | None = None
    ladder: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {"case": self.case.value, "B_inf": self.B_inf, "Dhat_inf": self.Dhat_inf, "D_inf": self.D_inf}


def _is_degenerate(pair: EntirePair) -> bool:
    """C1 vanishes identically on a fixed set of sample points."""
    k = np.arange(config.PAIR_DEGENERATE_SAMPLES)
    lams = (0.5 + 0.37 * k) * np.exp(1j * (0.3 + 2.0 * np.pi * k / config.PAIR_DEGENERATE_SAMPLES))
    c0, c1 = pair.evaluate(lams)
    return bool(np.all(np.abs(c1) <= config.PAIR_VALIDATION_TOL * (1.0 + np.abs(c0))))


def _tau_on_ladder(pair: EntirePair) -> tuple[np.ndarray, np.ndarray]:
    """tau(iy) on the configured ladder, falling back to a shorter ladder on overflow."""
    for ladder in (config.INFINITY_LADDER, config.INFINITY_FALLBACK_LADDER):
        ys, values = [], []
        for y in ladder:
            try:
                c0, c1 = pair.evaluate(1j * y)
            except EvaluationError:
                continue
            c0, c1 = complex(c0), complex(c1)
            if c1 == 0 or not (math.isfinite(abs(c0)) and math.isfinite(abs(c1))):
                continue
            ys.append(y)
            values.append(-c0 / c1)
        if len(ys) >= 3:
            return np.array(ys), np.array(values)
        logger.debug(f"Only {len(ys)} usable rungs on ladder {ladder}")
    raise NonConvergentLimitError("tau(iy)", [])


def _richardson(ys: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Eliminate a 1/y error term between consecutive rungs."""
    ratio = ys[1:] / ys[:-1]
    return (ratio * values[1:] - values[:-1]) / (ratio - 1.0)


def _stable_limit(quantity: str, ys: np.ndarray, values: np.ndarray) -> complex:
    extrapolated = _richardson(ys, values)
    last, prev = extrapolated[-1], extrapolated[-2]
    if abs(last - prev) > config.LIMIT_STABILITY_TOL * max(1.0, abs(last)):
        raise NonConvergentLimitError(quantity, [complex(v) for v in values])
    return complex(last)


def _grows_without_bound(ys: np.ndarray, g: np.ndarray) -> bool:
    """y * Im tau(iy) increases monotonically and either grew by the configured
    factor overall or still grows by the decade ratio at the top of the ladder."""
    if np.any(g <= 0) or np.any(np.diff(g) <= 0):
        return False
    if g[-1] / g[0] >= config.DHAT_GROWTH_FACTOR:
        return True
    exponent = math.log(g[-1] / g[-2]) / math.log(ys[-1] / ys[-2])
    return exponent >= math.log10(config.DHAT_DECADE_RATIO)


def classify_infinity(pair: EntirePair) -> CaseClassification:
    """Estimate B_inf = lim tau(iy)/(iy), Dhat_inf = lim y Im tau(iy) and D_inf = lim tau(iy).

    Raises:
        NonConvergentLimitError: when a needed limit does not settle on the ladder.
    """
    if _is_degenerate(pair):
        logger.info("C1 vanishes identically: degenerate pair")
        return CaseClassification(Case.DEGENERATE, B_inf=math.inf, Dhat_inf=math.inf)

    ys, taus = _tau_on_ladder(pair)
    ladder = tuple(float(y) for y in ys)
    b_inf = _stable_limit("B_inf", ys, taus / (1j * ys)).real
    if abs(b_inf) <= config.INFINITY_ZERO_TOL:
        b_inf = 0.0
    if b_inf != 0.0:
        return CaseClassification(Case.CASE1, B_inf=b_inf, Dhat_inf=math.inf, ladder=ladder)

    g = ys * taus.imag
    if _grows_without_bound(ys, g):
        return CaseClassification(Case.CASE3, B_inf=0.0, Dhat_inf=math.inf, ladder=ladder)

    dhat = _stable_limit("Dhat_inf", ys, g.astype(complex)).real
    d_inf = _stable_limit("D_inf", ys, taus).real
    return CaseClassification(Case.CASE2, B_inf=0.0, Dhat_inf=dhat, D_inf=d_inf, ladder=ladder)


class EtaKind(StrEnum):
    GAMMA0_ZERO = "Gamma0Zero"
    ROBIN = "Robin"
    BOTH_ZERO = "BothZero"


@dataclass(frozen=True)
class EtaRelation:
    kind: EtaKind
    D_inf: float | None = None

    def describe(self) -> str:
        match self.kind:
            case EtaKind.GAMMA0_ZERO:
                return "Gamma0b y = 0"
            case EtaKind.ROBIN:
                return f"Gamma1b y = {self.D_inf!r} * Gamma0b y"
            case EtaKind.BOTH_ZERO:
                return "Gamma0b y = Gamma1b y = 0"

    def defects(self, gamma0: complex, gamma1: complex) -> list[complex]:
        """Residuals that vanish when (Gamma0b y, Gamma1b y) lies in the relation."""
        match self.kind:
            case EtaKind.GAMMA0_ZERO:
                return [gamma0]
            case EtaKind.ROBIN:
                return [gamma1 - self.D_inf * gamma0]
            case EtaKind.BOTH_ZERO:
                return [gamma0, gamma1]

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "D_inf": self.D_inf, "condition": self.describe()}


def eta_relation(classification: CaseClassification) -> EtaRelation:
    match classification.case:
        case Case.CASE1 | Case.DEGENERATE:
            return EtaRelation(EtaKind.GAMMA0_ZERO)
        case Case.CASE2:
            return EtaRelation(EtaKind.ROBIN, classification.D_inf)
        case Case.CASE3:
            return EtaRelation(EtaKind.BOTH_ZERO)
    raise PairError(f"unknown case {classification.case}")

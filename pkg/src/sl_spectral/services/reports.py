"""Command-level workflows shared by the CLI and the MCP server.

Each function takes a loaded ``ProblemSpec`` and returns plain data ready
for JSON output. The async variants are the primary API; the spectrum scan
they rely on runs its integrations on worker threads.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

from sl_utils import config
from ..core.errors import ExpansionError, PairError, SpectralError
from ..core.problem_file import ProblemSpec
from . import expansion, oracle, sl_core, spectrum, spectrum_cache
from .characteristic import CharacteristicPair
from .nevpair import classify_infinity, eta_relation, validate_pair

logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    """JSON payload plus the exit status the CLI should use."""

    payload: dict
    ok: bool = True
    csv: str | None = None


def _window(spec: ProblemSpec, window) -> tuple[float, float]:
    chosen = window or spec.window
    if chosen is None:
        raise SpectralError("no window given: set 'window' in the problem file or pass --window lo:hi")
    return float(chosen[0]), float(chosen[1])


def validate(spec: ProblemSpec) -> CommandResult:
    """Coefficient checks, pair validation, case classification and the eta relation."""
    coefficients = sl_core.check_coefficients(spec.problem)
    pair_report = validate_pair(spec.pair)
    payload = {
        "name": spec.name,
        "coefficients": coefficients.to_dict(),
        "pair": {**spec.pair.describe(), **pair_report.to_dict()},
        "trivial_weight": not coefficients.nontrivial_weight,
    }
    ok = coefficients.ok and pair_report.passed and pair_report.realness
    if pair_report.passed:
        try:
            classification = classify_infinity(spec.pair)
            payload["classification"] = classification.to_dict()
            payload["case"] = classification.case.value
            payload["eta"] = eta_relation(classification).describe()
        except PairError as e:
            payload["classification_error"] = str(e)
            ok = False
    payload["passed"] = ok
    return CommandResult(payload, ok)


async def spectrum_async(spec: ProblemSpec, window=None, use_cache: bool = False, check_count: bool = True) -> spectrum.DiscreteSpectralFunction:
    lo, hi = _window(spec, window)
    key = None
    if use_cache:
        await spectrum_cache.init_cache_database()
        key = spectrum_cache.compute_cache_key(spec.problem, spec.pair, (lo, hi))
        cached = await spectrum_cache.get_cached_spectrum(key)
        if cached is not None:
            return cached
    cp = CharacteristicPair.build(spec.problem, spec.pair)
    result = await spectrum.find_eigenvalues_async(cp, (lo, hi), check_count)
    if use_cache:
        await spectrum_cache.save_spectrum_to_cache(key, result, spec.name)
    return result


async def spectrum_command(spec: ProblemSpec, window=None, use_cache: bool = False) -> CommandResult:
    result = await spectrum_async(spec, window, use_cache)
    return CommandResult({"window": list(result.window), "eigenvalues": result.to_rows()})


async def _expansion_data(spec: ProblemSpec, Ks: Sequence[int]):
    if spec.target is None:
        raise ExpansionError("the problem file has no 'target' section")
    Ks = sorted(set(int(K) for K in Ks))
    if not Ks or Ks[0] < 0:
        raise ExpansionError(f"K values must be nonnegative, got {Ks}")
    cp = CharacteristicPair.build(spec.problem, spec.pair)
    lo = spec.window[0] if spec.window else -1.0
    found = await spectrum.first_eigenvalues_async(cp, Ks[-1], lo)
    target = expansion.TargetFunction.from_exprs(spec.problem, **spec.target)
    terms = expansion.expansion_terms(spec.problem, found.eigenvalues, target)
    return Ks, target, terms


async def expand_command(spec: ProblemSpec, Ks: Sequence[int]) -> CommandResult:
    """Coefficients, L2 residuals and Parseval defects; CSV of the largest partial sum."""
    Ks, target, terms = await _expansion_data(spec, Ks)
    l2 = expansion.l2_report(spec.problem, target, terms, Ks)
    payload = {
        "name": spec.name,
        "target": target.source,
        "bhat": [t.coefficient for t in terms],
        "terms": [t.to_dict() for t in terms],
        "residuals": [{"K": r.K, "residual": r.residual} for r in l2.rows],
        "parseval_defect": [{"K": r.K, "defect": r.parseval_defect} for r in l2.rows],
        "bessel_ok": l2.bessel_ok,
    }
    csv = expansion.series_csv(spec.problem, target, terms, Ks[-1])
    return CommandResult(payload, l2.bessel_ok, csv)


async def converge_command(spec: ProblemSpec, Ks: Sequence[int]) -> CommandResult:
    """L2 and sup-norm residual tables with the uniform-convergence verdict.

    Fails when the Bessel bound breaks, or when an eligible target's sup
    residuals do not decrease along Ks.
    """
    Ks, target, terms = await _expansion_data(spec, Ks)
    l2 = expansion.l2_report(spec.problem, target, terms, Ks)
    uniform = expansion.uniform_report(spec.problem, classify_infinity(spec.pair), target, terms, Ks)
    sups = [r.sup_residual for r in uniform.rows]
    decreasing = all(b <= a for a, b in zip(sups, sups[1:]))
    payload = {
        "name": spec.name,
        "l2": l2.to_dict(),
        "uniform": uniform.to_dict(),
        "sup_decreasing": decreasing,
    }
    ok = l2.bessel_ok and (decreasing or not uniform.eligibility.eligible)
    return CommandResult(payload, ok)


async def oracle_command(spec: ProblemSpec, n: int, window=None) -> CommandResult:
    """Engine spectrum against the finite-element pencil on the same window."""
    lo, hi = _window(spec, window)
    values = oracle.oracle_eigenvalues(spec.problem, spec.pair, n, (lo, hi))
    engine = await spectrum_async(spec, (lo, hi))
    comparison = oracle.compare(engine.ts, values, (lo, hi), config.ORACLE_MATCH_TOL)
    payload = {"name": spec.name, "grid": n, "window": [lo, hi], **comparison.to_dict()}
    logger.info(f"Oracle comparison: max gap {comparison.max_gap:.3e}, passed={comparison.passed}")
    return CommandResult(payload, comparison.passed)

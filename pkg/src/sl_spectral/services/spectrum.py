"""Eigenvalues as real zeros of Psi, their residues, and the discrete spectral function.

The scan follows the batch pattern used elsewhere in the package: the grid is
cut into chunks of SCAN_CHUNK_SIZE lambdas, each chunk is integrated in one
call on a worker thread, and a semaphore bounds how many chunks run at once.
Chunking depends only on the grid, so results are deterministic.
"""

import asyncio
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from sl_utils import config
from ..core.errors import (
    CountMismatchError,
    EvaluationError,
    NevanlinnaViolationError,
    NonSimpleZeroError,
    RealnessError,
    SpectrumError,
)
from . import sl_core
from .characteristic import CharacteristicPair
from .nevpair import is_real_on_axis

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Eigenvalue:
    t: float
    residue_xi: float
    psi_deriv: float
    multiplicity_check: float
    phi_value: float = 0.0
    derivative_crosscheck: float = 0.0

    def to_dict(self) -> dict:
        return {"t": self.t, "xi": self.residue_xi}


@dataclass
class DiscreteSpectralFunction:
    eigenvalues: list[Eigenvalue]
    window: tuple[float, float]
    spurious: list[float] = field(default_factory=list)
    contour_count: float | None = None

    @property
    def ts(self) -> np.ndarray:
        return np.array([e.t for e in self.eigenvalues])

    @property
    def xis(self) -> np.ndarray:
        return np.array([e.residue_xi for e in self.eigenvalues])

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def to_rows(self) -> list[dict]:
        return [e.to_dict() for e in self.eigenvalues]

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "eigenvalues": self.to_rows(),
            "spurious_common_zeros": list(self.spurious),
            "contour_count": self.contour_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteSpectralFunction":
        """Rebuild from ``to_dict`` output; only t and xi are restored."""
        eigenvalues = [
            Eigenvalue(t=row["t"], residue_xi=row["xi"], psi_deriv=math.nan, multiplicity_check=math.nan)
            for row in data["eigenvalues"]
        ]
        return cls(eigenvalues, tuple(data["window"]), list(data.get("spurious_common_zeros", [])), data.get("contour_count"))


# Batched evaluation ---------------------------------------------------------

async def evaluate_async(cp: CharacteristicPair, lams, concurrency: int | None = None):
    """(Phi, Psi) at many lambdas, chunked over worker threads."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if lams.size == 0:
        return np.empty(0, dtype=complex), np.empty(0, dtype=complex)
    semaphore = asyncio.Semaphore(concurrency or config.SCAN_CONCURRENCY)
    chunks = [lams[i:i + config.SCAN_CHUNK_SIZE] for i in range(0, lams.size, config.SCAN_CHUNK_SIZE)]

    async def run(chunk):
        async with semaphore:
            return await asyncio.to_thread(cp.evaluate, chunk)

    results = await asyncio.gather(*(run(chunk) for chunk in chunks))
    return np.concatenate([r[0] for r in results]), np.concatenate([r[1] for r in results])


# Scan -----------------------------------------------------------------------

def _pair_exponential_type(cp: CharacteristicPair) -> float:
    """Growth rate of the pair along the imaginary axis; zeros it causes are about pi / rate apart."""
    try:
        c0, c1 = cp.pair.evaluate(np.array([10j, 20j]))
    except EvaluationError:
        return 1.0
    size = np.abs(c0) + np.abs(c1)
    if np.any(size == 0):
        return 0.0
    return max(0.0, float(np.log(size[1] / size[0])) / 10.0)


def initial_grid(lo: float, hi: float, length: float, pair_type: float = 0.0) -> np.ndarray:
    """Grid whose spacing is a fraction of the local eigenvalue gap 2 pi sqrt(t) / length."""
    points = [lo]
    t = lo
    while t < hi:
        root = max(1.0, math.sqrt(abs(t)))
        step = min(
            config.SCAN_OSCILLATION_FRACTION * 2.0 * math.pi * root / length,
            config.SCAN_MAX_STEP * root,
        )
        if pair_type > 0:
            step = min(step, config.SCAN_OSCILLATION_FRACTION * math.pi / pair_type)
        t = min(t + step, hi)
        points.append(t)
    return np.array(points)


def _sign_changes(values: np.ndarray) -> int:
    s = np.sign(values)
    return int(np.count_nonzero(s[:-1] * s[1:] < 0) + np.count_nonzero(s == 0))


def _interleave(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(a.size + b.size, dtype=np.result_type(a, b))
    out[0::2], out[1::2] = a, b
    return out


@dataclass
class _Scan:
    grid: np.ndarray
    phi: np.ndarray
    psi: np.ndarray


async def _scan(cp: CharacteristicPair, lo: float, hi: float) -> _Scan:
    length = sl_core.oscillation_length(cp.problem)
    grid = initial_grid(lo, hi, length, _pair_exponential_type(cp))
    phi, psi = await evaluate_async(cp, grid)
    _check_real(psi)
    counts = [_sign_changes(psi.real)]
    logger.debug(f"Initial scan: {grid.size} points, {counts[0]} sign changes")

    for _ in range(config.SCAN_MAX_REFINEMENTS):
        mids = 0.5 * (grid[:-1] + grid[1:])
        phi_m, psi_m = await evaluate_async(cp, mids)
        grid = _interleave(grid[:-1], mids)
        grid = np.append(grid, hi)
        phi = np.append(_interleave(phi[:-1], phi_m), phi[-1])
        psi = np.append(_interleave(psi[:-1], psi_m), psi[-1])
        counts.append(_sign_changes(psi.real))
        logger.debug(f"Refined scan: {grid.size} points, {counts[-1]} sign changes")
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
            break
    else:
        logger.warning(f"Sign-change count still moving after {config.SCAN_MAX_REFINEMENTS} refinements: {counts}")
    return _Scan(grid, phi.real, psi.real)


def _check_real(values: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(values.imag)) > 1e-6 * scale:
        raise RealnessError("Psi is not real on the real axis; check that the coefficients and pair are real")


# Root refinement ------------------------------------------------------------

async def refine_brackets(cp: CharacteristicPair, lo, hi, f_lo, f_hi, tol: float) -> np.ndarray:
    """Safeguarded Illinois/bisection iteration on all brackets at once.

    Each bracket must carry a strict sign change. Iteration stops when every
    bracket is narrower than tol * max(1, |t|); the midpoint is returned.
    """
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    f_lo, f_hi = np.array(f_lo, dtype=float), np.array(f_hi, dtype=float)
    retained = np.zeros(lo.size, dtype=int)
    force_bisect = np.zeros(lo.size, dtype=bool)

    for _ in range(config.ROOT_MAX_ITER):
        width = hi - lo
        active = width > tol * np.maximum(1.0, np.abs(0.5 * (lo + hi)))
        if not active.any():
            break
        idx = np.flatnonzero(active)
        a, b, fa, fb = lo[idx], hi[idx], f_lo[idx], f_hi[idx]
        with np.errstate(all="ignore"):
            secant = b - fb * (b - a) / (fb - fa)
        bisect = force_bisect[idx] | ~np.isfinite(secant) | (secant <= a) | (secant >= b)
        cand = np.where(bisect, 0.5 * (a + b), secant)
        _, fc = await evaluate_async(cp, cand)
        fc = fc.real

        keep_hi = np.sign(fc) == np.sign(fa)  # root lies in [cand, b]
        exact = fc == 0
        new_a = np.where(keep_hi | exact, cand, a)
        new_b = np.where(keep_hi & ~exact, b, cand)
        new_fa = np.where(keep_hi, fc, fa)
        new_fb = np.where(keep_hi, fb, fc)
        # Illinois: halve the stale end when the same end survives twice
        new_fb = np.where(keep_hi & (retained[idx] == 1), 0.5 * new_fb, new_fb)
        new_fa = np.where(~keep_hi & (retained[idx] == -1), 0.5 * new_fa, new_fa)

        retained[idx] = np.where(keep_hi, 1, -1)
        force_bisect[idx] = (new_b - new_a) > 0.5 * (b - a)
        lo[idx], hi[idx], f_lo[idx], f_hi[idx] = new_a, new_b, new_fa, new_fb
    else:
        logger.warning(f"Root refinement hit ROOT_MAX_ITER={config.ROOT_MAX_ITER}")
    return 0.5 * (lo + hi)


def _tangential_candidates(scan: _Scan) -> list[int]:
    """Grid indices of local minima of |Psi| with no sign change around them."""
    mag = np.abs(scan.psi)
    s = np.sign(scan.psi)
    found = []
    for i in range(1, mag.size - 1):
        if not (s[i - 1] == s[i] == s[i + 1] != 0):
            continue
        neighbours = min(mag[i - 1], mag[i + 1])
        if mag[i] < neighbours and mag[i] < config.TANGENT_SCREEN_RATIO * neighbours:
            found.append(i)
    return found


def _screen_tangential(cp: CharacteristicPair, scan: _Scan) -> list[tuple[float, float, float, float]]:
    """Minimize |Psi| near suspicious minima.

    A minimum below TANGENT_TOL * scale is a double zero and raises; a minimum
    with the opposite sign reveals two close simple zeros, returned as extra
    brackets (t_left, t_min, psi_left, psi_min) and (t_min, t_right, ...).
    """
    extra = []
    for i in _tangential_candidates(scan):
        t0, t1 = scan.grid[i - 1], scan.grid[i + 1]
        scale = max(abs(scan.psi[i - 1]), abs(scan.psi[i + 1]))
        res = minimize_scalar(
            lambda t: abs(cp.Psi(t).real), bounds=(t0, t1), method="bounded",
            options={"xatol": 1e-10 * max(1.0, abs(t0))},
        )
        t_min = float(res.x)
        psi_min = cp.Psi(t_min).real
        if abs(psi_min) < config.TANGENT_TOL * scale:
            raise NonSimpleZeroError(f"Psi has a tangential (multiple) zero near t = {t_min!r}")
        if np.sign(psi_min) != np.sign(scan.psi[i]):
            logger.info(f"Found two close zeros near t = {t_min!r} missed by the grid")
            extra.append((t0, t_min, scan.psi[i - 1], psi_min))
            extra.append((t_min, t1, psi_min, scan.psi[i + 1]))
    return extra


# Residues -------------------------------------------------------------------

def residues(cp: CharacteristicPair, ts) -> list[Eigenvalue]:
    """Residue data at refined simple zeros of Psi.

    Psi' comes from the complex step Im Psi(t + ih) / h with
    h = 1e-8 * max(1, |t|); a central difference with step 1e-4 * max(1, |t|)
    is kept as a cross-check. xi = -Phi(t) / Psi'(t).

    Raises:
        NonSimpleZeroError: when the scaled |Psi'| is below SIMPLE_ZERO_TOL.
        NevanlinnaViolationError: when xi is negative beyond tolerance.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if ts.size == 0:
        return []
    scale = np.maximum(1.0, np.abs(ts))
    h, delta = 1e-8 * scale, 1e-4 * scale
    phi, psi = cp.evaluate(np.concatenate((ts, ts + 1j * h, ts + delta, ts - delta)))
    n = ts.size
    phi_t = phi[:n].real
    dpsi = psi[n:2 * n].imag / h
    central = (psi[2 * n:3 * n].real - psi[3 * n:].real) / (2 * delta)

    out = []
    for k, t in enumerate(ts):
        crosscheck = abs(central[k] - dpsi[k]) / max(abs(dpsi[k]), 1e-300)
        if crosscheck > config.DERIVATIVE_CROSSCHECK_TOL:
            logger.warning(f"Psi'({t!r}): complex step {dpsi[k]:.12g} vs central difference {central[k]:.12g}")
        weighted = abs(dpsi[k]) * scale[k]
        multiplicity = weighted / (abs(phi_t[k]) + weighted) if weighted > 0 else 0.0
        if multiplicity < config.SIMPLE_ZERO_TOL:
            raise NonSimpleZeroError(f"Psi'({t!r}) vanishes (scaled {multiplicity:.3e}); the pole is not simple")
        xi = -phi_t[k] / dpsi[k]
        if xi < -config.RESIDUE_NEGATIVE_TOL * max(1.0, abs(xi)):
            raise NevanlinnaViolationError(f"negative residue weight xi = {xi!r} at t = {t!r}")
        out.append(Eigenvalue(
            t=float(t), residue_xi=float(xi), psi_deriv=float(dpsi[k]), multiplicity_check=float(multiplicity),
            phi_value=float(phi_t[k]), derivative_crosscheck=float(crosscheck),
        ))
    return out


def residue_at(cp: CharacteristicPair, t: float) -> Eigenvalue:
    return residues(cp, [t])[0]


# Argument principle ---------------------------------------------------------

async def contour_count_async(cp: CharacteristicPair, lo: float, hi: float, base: np.ndarray | None = None) -> float:
    """Winding number of Psi around the rectangle [lo, hi] x [-H, H].

    The path starts from ``base`` (or a uniform grid) on the horizontal edges
    and is refined until every phase step is below CONTOUR_MAX_PHASE_STEP.
    """
    height = config.CONTOUR_HALF_HEIGHT
    xs = np.asarray(base if base is not None else np.linspace(lo, hi, 65), dtype=float)
    side = 1j * np.linspace(-height, height, 17)
    path = np.concatenate((
        xs - 1j * height,
        hi + side[1:],
        xs[::-1][1:] + 1j * height,
        lo + side[::-1][1:],
    ))
    _, values = await evaluate_async(cp, path)

    for _ in range(config.CONTOUR_MAX_ROUNDS):
        if np.any(values == 0):
            raise SpectrumError("Psi vanishes on the counting contour")
        closed = np.append(values, values[0])
        steps = np.angle(closed[1:] / closed[:-1])
        large = np.flatnonzero(np.abs(steps) > config.CONTOUR_MAX_PHASE_STEP)
        if large.size == 0:
            return float(steps.sum() / (2.0 * math.pi))
        ends = np.append(path, path[0])
        mids = 0.5 * (ends[large] + ends[large + 1])
        _, mid_values = await evaluate_async(cp, mids)
        path = np.insert(path, large + 1, mids)
        values = np.insert(values, large + 1, mid_values)
    raise SpectrumError(f"contour phase not resolved after {config.CONTOUR_MAX_ROUNDS} rounds")


# Public operations ----------------------------------------------------------

def _widen(lo: float, hi: float) -> tuple[float, float]:
    return lo - 1e-6 * max(1.0, abs(lo)), hi + 1e-6 * max(1.0, abs(hi))


def _in_window(ts: np.ndarray, lo: float, hi: float, tol: float) -> np.ndarray:
    """Roots of the widened scan that lie in [lo, hi] up to the root tolerance."""
    slack_lo, slack_hi = tol * max(1.0, abs(lo)), tol * max(1.0, abs(hi))
    return ts[(ts >= lo - slack_lo) & (ts <= hi + slack_hi)]


async def find_eigenvalues_async(cp: CharacteristicPair, window: tuple[float, float], check_count: bool = True) -> DiscreteSpectralFunction:
    """Window-complete list of eigenvalues with residues.

    Raises:
        CountMismatchError: when the argument principle disagrees with the scan.
        NonSimpleZeroError, NevanlinnaViolationError, RealnessError.
    """
    lo, hi = (float(v) for v in window)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise SpectrumError(f"window must be finite with lo < hi, got [{lo}, {hi}]")
    if not is_real_on_axis(cp.pair):
        raise RealnessError("the boundary pair is not real on the real axis")
    sl_core.require_valid_coefficients(cp.problem)

    scan_lo, scan_hi = _widen(lo, hi)
    scan = await _scan(cp, scan_lo, scan_hi)
    psi = scan.psi
    bound = np.maximum.reduce([np.abs(scan.phi[:-1]), np.abs(scan.phi[1:]), np.abs(psi[:-1]), np.abs(psi[1:])])

    changes = np.flatnonzero(np.sign(psi[:-1]) * np.sign(psi[1:]) < 0)
    brackets = [(scan.grid[i], scan.grid[i + 1], psi[i], psi[i + 1], bound[i]) for i in changes]
    for t0, t1, f0, f1 in await asyncio.to_thread(_screen_tangential, cp, scan):
        brackets.append((t0, t1, f0, f1, max(abs(f0), abs(f1))))
    brackets.sort()
    exact = [(scan.grid[i], bound[min(i, bound.size - 1)]) for i in np.flatnonzero(psi == 0)]

    roots = []
    if brackets:
        lo_b, hi_b, f_lo, f_hi, _ = (np.array(col) for col in zip(*brackets))
        refined = await refine_brackets(cp, lo_b, hi_b, f_lo, f_hi, cp.problem.tolerances.root)
        roots = [(float(t), float(b[4])) for t, b in zip(refined, brackets)]
    roots = sorted(roots + [(float(t), float(s)) for t, s in exact])

    ts = np.array([t for t, _ in roots])
    scales = 1.0 + np.array([s for _, s in roots])
    spurious = []
    if ts.size:
        phi_r, psi_r = (v.real for v in await evaluate_async(cp, ts))
        common = (np.abs(phi_r) <= config.COMMON_ZERO_TOL * scales) & (np.abs(psi_r) <= config.COMMON_ZERO_TOL * scales)
        spurious = [float(t) for t in ts[common]]
        for t in spurious:
            logger.warning(f"Excluding t = {t!r}: common zero of Phi and Psi (spurious)")
        ts = ts[~common]

    count = None
    if check_count:
        count = await contour_count_async(cp, scan_lo, scan_hi, scan.grid)
        found = ts.size + len(spurious)
        if abs(count - round(count)) > 0.1 or round(count) != found:
            raise CountMismatchError(found, count)

    ts = _in_window(ts, lo, hi, cp.problem.tolerances.root)
    spurious = [float(t) for t in _in_window(np.array(spurious), lo, hi, cp.problem.tolerances.root)]
    eigenvalues = await asyncio.to_thread(residues, cp, ts)
    logger.info(f"Found {len(eigenvalues)} eigenvalues in [{lo}, {hi}]")
    return DiscreteSpectralFunction(eigenvalues, (lo, hi), spurious, count)


def find_eigenvalues(cp: CharacteristicPair, window: tuple[float, float], check_count: bool = True) -> DiscreteSpectralFunction:
    return asyncio.run(find_eigenvalues_async(cp, window, check_count))


async def first_eigenvalues_async(cp: CharacteristicPair, count: int, lo: float = -1.0) -> DiscreteSpectralFunction:
    """The lowest ``count`` eigenvalues above lo, growing the window until they are certified."""
    if count <= 0:
        return DiscreteSpectralFunction([], (lo, lo))
    length = sl_core.oscillation_length(cp.problem)
    span = max(10.0, 1.2 * ((count + 1) * math.pi / length) ** 2)
    for _ in range(12):
        found = await find_eigenvalues_async(cp, (lo, lo + span))
        if len(found) >= count:
            kept = found.eigenvalues[:count]
            top = kept[-1].t if len(found) == count else 0.5 * (kept[-1].t + found.eigenvalues[count].t)
            return DiscreteSpectralFunction(kept, (lo, top), found.spurious, found.contour_count)
        span *= 2.0
    raise SpectrumError(f"could not certify {count} eigenvalues above {lo}")


def first_eigenvalues(cp: CharacteristicPair, count: int, lo: float = -1.0) -> DiscreteSpectralFunction:
    return asyncio.run(first_eigenvalues_async(cp, count, lo))

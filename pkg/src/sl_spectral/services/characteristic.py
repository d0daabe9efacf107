"""Characteristic pair (Phi, Psi) and the Nevanlinna function m = Phi / Psi.

Two routes are available:

* regular: Phi = psi(b) C0 + psi1(b) C1, Psi = phi(b) C0 + phi1(b) C1;
* quasiregular: Phi = w2 C0 + w4 C1, Psi = w1 C0 + w3 C1 with the
  w-coefficients built from weighted integrals against the lambda = 0
  solutions.

On a regular problem the pair is first transported from (y(b), y1(b)) to the
bracket maps (Gamma0b, Gamma1b), so both routes give the same Phi and Psi.
"""

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from sl_utils import config
from ..core.errors import CharacteristicError, PoleHitError
from . import sl_core
from .nevpair import EntirePair
from .sl_core import Problem, Regularity

logger = logging.getLogger(__name__)


class Route(StrEnum):
    REGULAR_DIRECT = "RegularDirect"
    QUASIREGULAR_W = "QuasiregularW"


def transport_pair(problem: Problem, c0, c1):
    """Rewrite a pair acting on (y(b), y1(b)) as a pair acting on (Gamma0b y, Gamma1b y)."""
    phi0, psi0 = sl_core.zero_solutions(problem)
    f, f1 = phi0(problem.truncation)
    g, g1 = psi0(problem.truncation)
    return c0 * f + c1 * f1, c0 * g + c1 * g1


def char_regular_many(problem: Problem, pair: EntirePair, lams):
    if problem.regularity is not Regularity.REGULAR:
        raise CharacteristicError("the regular route needs a regular problem")
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    shot = sl_core.shoot(problem, lams)
    c0, c1 = pair.evaluate(lams)
    return shot.psi * c0 + shot.psi1 * c1, shot.phi * c0 + shot.phi1 * c1


def char_regular(problem: Problem, pair: EntirePair, lam: complex) -> tuple[complex, complex]:
    """(Phi, Psi) at lam from the endpoint values of phi_B and psi_B."""
    phi, psi = char_regular_many(problem, pair, [lam])
    return complex(phi[0]), complex(psi[0])


def w_coeffs_many(problem: Problem, lams) -> np.ndarray:
    """w1..w4 for every lam from one integration with moment states; shape (4, n)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    _, (i1, i2, i3, i4) = sl_core.shoot_with_moments(problem, lams)
    return np.array([1.0 + lams * i1, lams * i2, -lams * i3, 1.0 - lams * i4])


def w_coeffs(problem: Problem, lam: complex) -> tuple[complex, complex, complex, complex]:
    """w1..w4 at lam by quadrature against the cached lambda = 0 solutions.

    w1 = 1 + lam int psi0 Delta phi     w2 = lam int psi0 Delta psi
    w3 = -lam int phi0 Delta phi        w4 = 1 - lam int phi0 Delta psi
    """
    if lam == 0:
        return 1.0 + 0j, 0j, 0j, 1.0 + 0j
    phi0, psi0 = sl_core.zero_solutions(problem)
    phi, psi = sl_core.phi_psi(problem, lam)
    i1 = sl_core.inner_delta(problem, phi, psi0)
    i2 = sl_core.inner_delta(problem, psi, psi0)
    i3 = sl_core.inner_delta(problem, phi, phi0)
    i4 = sl_core.inner_delta(problem, psi, phi0)
    return 1.0 + lam * i1, lam * i2, -lam * i3, 1.0 - lam * i4


def _bracket_pair(problem: Problem, pair: EntirePair, lams):
    c0, c1 = pair.evaluate(lams)
    if problem.regularity is Regularity.REGULAR:
        return transport_pair(problem, c0, c1)
    return c0, c1


def char_quasiregular_many(problem: Problem, pair: EntirePair, lams):
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    w1, w2, w3, w4 = w_coeffs_many(problem, lams)
    c0, c1 = _bracket_pair(problem, pair, lams)
    return w2 * c0 + w4 * c1, w1 * c0 + w3 * c1


def char_quasiregular(problem: Problem, pair: EntirePair, lam: complex) -> tuple[complex, complex]:
    """(Phi, Psi) at lam from the linear-fractional w-coefficient form."""
    w1, w2, w3, w4 = w_coeffs(problem, lam)
    c0, c1 = (complex(v) for v in _bracket_pair(problem, pair, lam))
    return w2 * c0 + w4 * c1, w1 * c0 + w3 * c1


@dataclass(frozen=True, eq=False)
class CharacteristicPair:
    problem: Problem
    pair: EntirePair
    mode: Route

    def __post_init__(self):
        sl_core.zero_solutions(self.problem)

    @classmethod
    def build(cls, problem: Problem, pair: EntirePair, mode: Route | None = None) -> "CharacteristicPair":
        if mode is None:
            mode = Route.REGULAR_DIRECT if problem.regularity is Regularity.REGULAR else Route.QUASIREGULAR_W
        return cls(problem, pair, Route(mode))

    def evaluate(self, lams):
        """(Phi, Psi) as complex arrays, integrated in chunks of SCAN_CHUNK_SIZE."""
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        many = char_regular_many if self.mode is Route.REGULAR_DIRECT else char_quasiregular_many
        phi, psi = np.empty_like(lams), np.empty_like(lams)
        for start in range(0, lams.size, config.SCAN_CHUNK_SIZE):
            part = slice(start, start + config.SCAN_CHUNK_SIZE)
            phi[part], psi[part] = many(self.problem, self.pair, lams[part])
        return phi, psi

    def __call__(self, lam: complex) -> tuple[complex, complex]:
        phi, psi = self.evaluate([lam])
        return complex(phi[0]), complex(psi[0])

    def Phi(self, lam: complex) -> complex:
        return self(lam)[0]

    def Psi(self, lam: complex) -> complex:
        return self(lam)[1]


def m_value(cp: CharacteristicPair, lam: complex) -> complex:
    """Phi(lam) / Psi(lam).

    Raises:
        PoleHitError: if |Psi| < POLE_THRESHOLD * (|Phi| + |Psi| + 1).
    """
    phi, psi = cp(lam)
    if abs(psi) < config.POLE_THRESHOLD * (abs(phi) + abs(psi) + 1.0):
        raise PoleHitError(f"lambda = {lam} is numerically a pole of m (|Psi| = {abs(psi):.3e})")
    return phi / psi


def entirety_defect(cp: CharacteristicPair, centers, radius: float = 0.5, nodes: int = 32) -> float:
    """Largest relative error of the mean-value reconstruction of Psi on circles.

    For an entire Psi the average over a circle equals the value at its
    centre; the trapezoid rule makes this exact up to integration error.
    """
    centers = np.atleast_1d(np.asarray(centers, dtype=complex))
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    ring = centers[:, None] + radius * np.exp(1j * theta)[None, :]
    _, psi_ring = cp.evaluate(ring.ravel())
    _, psi_center = cp.evaluate(centers)
    psi_ring = psi_ring.reshape(ring.shape)
    scale = np.maximum(np.abs(psi_center), np.max(np.abs(psi_ring), axis=1))
    defect = np.abs(psi_ring.mean(axis=1) - psi_center) / scale
    return float(defect.max())

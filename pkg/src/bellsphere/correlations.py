"""Correlation functions, the CHSH combination and its extremes.

Photon settings are Poincare-sphere angles in radians.  Kaon and B-meson
settings are measurement times (units of ``1/gamma_s`` and ``1/gamma``).
All closed forms accept numpy arrays.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .channels import BMesonSpec, KaonSpec, bmeson_evolution_operator, kaon_evolution_operator
from .errors import DomainError
from .states import MASS, JointProbabilities, apply_local, element_bloch, joint_probabilities, singlet

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

CorrelationFn = Callable[[float, float], float]


@dataclass(frozen=True)
class Settings4:
    a: float
    a_prime: float
    b: float
    b_prime: float

    @classmethod
    def family(cls, theta: float) -> Settings4:
        """One-parameter family ``(0, 2 theta, theta, 3 theta)``."""
        return cls(0.0, 2.0 * theta, theta, 3.0 * theta)

    def pairs(self) -> list[tuple[float, float]]:
        """Setting pairs in CHSH order: (a,b), (a,b'), (a',b), (a',b')."""
        return [(self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b), (self.a_prime, self.b_prime)]


CHSH_SIGNS = (1, -1, 1, 1)


def chsh_S(E: CorrelationFn, s: Settings4) -> float:
    """``E(a,b) - E(a,b') + E(a',b) + E(a',b')``."""
    return sum(sign * E(x, y) for sign, (x, y) in zip(CHSH_SIGNS, s.pairs()))


# ---------------------------------------------------------------- closed forms


def photon_E(a, b):
    return -np.cos(np.subtract(a, b))


def _split_times(t_a, t_b):
    t_a, t_b = np.asarray(t_a, dtype=float), np.asarray(t_b, dtype=float)
    if np.any(t_a < 0) or np.any(t_b < 0):
        raise DomainError("measurement times must be non-negative")
    return np.minimum(t_a, t_b), np.abs(t_a - t_b)


def kaon_rates(t_a, t_b, spec: KaonSpec | None = None):
    """Strangeness coincidence rates ``(R++, R+-, R-+, R--)``; ``+`` is K0.

    ``R++ = R--`` and ``R+- = R-+`` by the symmetry of the singlet.
    """
    spec = spec or KaonSpec()
    t_min, dt = _split_times(t_a, t_b)
    prefactor = np.exp(-(spec.gamma_s + spec.gamma_l) * t_min) / 8.0
    even = np.exp(-spec.gamma_s * dt) + np.exp(-spec.gamma_l * dt)
    mixing = 2.0 * np.exp(-spec.gamma * dt) * np.cos(spec.delta_m * dt)
    same = prefactor * (even - mixing)
    opposite = prefactor * (even + mixing)
    return same, opposite, opposite, same


def kaon_R_pp(t_a, t_b, spec: KaonSpec | None = None):
    return kaon_rates(t_a, t_b, spec)[0]


def kaon_E_unnormalized(t_a, t_b, spec: KaonSpec | None = None):
    """``-exp(-2 gamma t') exp(-gamma dt) cos(delta_m dt)``; decayed pairs count as 0."""
    spec = spec or KaonSpec()
    t_min, dt = _split_times(t_a, t_b)
    return -np.exp(-2.0 * spec.gamma * t_min) * np.exp(-spec.gamma * dt) * np.cos(spec.delta_m * dt)


def kaon_E_normalized(t_a, t_b, spec: KaonSpec | None = None):
    """Correlation among surviving pairs; depends on ``|t_a - t_b|`` only."""
    spec = spec or KaonSpec()
    _, dt = _split_times(t_a, t_b)
    num = -2.0 * np.exp(-spec.gamma * dt) * np.cos(spec.delta_m * dt)
    return num / (np.exp(-spec.gamma_s * dt) + np.exp(-spec.gamma_l * dt))


def bmeson_E(t_a, t_b, spec: BMesonSpec | None = None):
    """Normalized B-meson correlation ``-cos(delta_m dt)``, independent of the width."""
    spec = spec or BMesonSpec()
    _, dt = _split_times(t_a, t_b)
    return -np.cos(spec.delta_m * dt)


# ---------------------------------------------------------------- first principles


def evolved_singlet_probabilities(op_a, op_b, axis_a, axis_b, basis=MASS) -> JointProbabilities:
    """Singlet, local evolution on each side, projective analysis along the given axes."""
    return joint_probabilities(apply_local(singlet(basis), op_a, op_b), axis_a, axis_b)


def kaon_rates_first_principles(t_a: float, t_b: float, spec: KaonSpec | None = None) -> JointProbabilities:
    spec = spec or KaonSpec()
    k0 = element_bloch("K0")
    return evolved_singlet_probabilities(
        kaon_evolution_operator(spec, t_a), kaon_evolution_operator(spec, t_b), k0, k0
    )


def bmeson_rates_first_principles(t_a: float, t_b: float, spec: BMesonSpec | None = None) -> JointProbabilities:
    spec = spec or BMesonSpec()
    b0 = element_bloch("K0")
    return evolved_singlet_probabilities(
        bmeson_evolution_operator(spec, t_a), bmeson_evolution_operator(spec, t_b), b0, b0
    )


def normalized_correlation(p: JointProbabilities) -> float:
    return p.correlation / p.detected


# ---------------------------------------------------------------- one-parameter scans


@dataclass(frozen=True)
class CorrelationSystem:
    """A correlation function of the setting difference and its natural scan range."""

    name: str
    e_of_difference: Callable[[np.ndarray], np.ndarray]
    default_range: tuple[float, float]
    angular: bool


SYSTEMS = ("photon", "kaon", "kaon-normalized", "bmeson")


def get_system(
    name: str, kaon: KaonSpec | None = None, bmeson: BMesonSpec | None = None
) -> CorrelationSystem:
    """Look up a system by tag.

    Kaon systems use settings ``(t_a, t_a', t_b, t_b') = (0, 2 tau, tau, 3 tau)``
    and scan tau over ``[0, 4 pi / delta_m]``.  The B-meson range is the photon
    range ``[0, pi/2]`` divided by ``delta_m``.
    """
    kaon = kaon or KaonSpec()
    bmeson = bmeson or BMesonSpec()
    if name == "photon":
        return CorrelationSystem(name, lambda d: photon_E(0.0, d), (0.0, math.pi / 2), True)
    if name == "kaon":
        return CorrelationSystem(
            name, lambda d: kaon_E_unnormalized(0.0, d, kaon), (0.0, 4 * math.pi / kaon.delta_m), False
        )
    if name == "kaon-normalized":
        return CorrelationSystem(
            name, lambda d: kaon_E_normalized(0.0, d, kaon), (0.0, 4 * math.pi / kaon.delta_m), False
        )
    if name == "bmeson":
        return CorrelationSystem(
            name, lambda d: bmeson_E(0.0, d, bmeson), (0.0, math.pi / 2 / bmeson.delta_m), False
        )
    raise ValueError(f"unknown system {name!r}; expected one of {', '.join(SYSTEMS)}")


def _resolve(system) -> CorrelationSystem:
    return system if isinstance(system, CorrelationSystem) else get_system(system)


def s_of_theta(system, theta):
    """``3 E(theta) - E(3 theta)``, vectorized over ``theta``."""
    sys_ = _resolve(system)
    theta = np.asarray(theta, dtype=float)
    return 3.0 * sys_.e_of_difference(theta) - sys_.e_of_difference(3.0 * theta)


@dataclass(frozen=True)
class ScanRecord:
    param: float
    E: float
    E3: float
    S: float

    @property
    def abs_S(self) -> float:
        return abs(self.S)

    @property
    def violates(self) -> bool:
        return abs(self.S) > 2.0


def chsh_theta_scan(system, start: float | None = None, stop: float | None = None, steps: int = 1001) -> list[ScanRecord]:
    if steps < 2:
        raise ValueError("steps must be at least 2")
    sys_ = _resolve(system)
    lo, hi = sys_.default_range
    grid = np.linspace(lo if start is None else start, hi if stop is None else stop, steps)
    e1 = sys_.e_of_difference(grid)
    e3 = sys_.e_of_difference(3.0 * grid)
    s = 3.0 * e1 - e3
    return [ScanRecord(float(p), float(x), float(y), float(z)) for p, x, y, z in zip(grid, e1, e3, s)]


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-8) -> float:
    """Maximizer of a unimodal ``f`` on ``[lo, hi]`` to within ``tol``."""
    a, b = min(lo, hi), max(lo, hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class Maximum:
    param: float
    abs_S: float


def maximize_S(
    system, start: float | None = None, stop: float | None = None, grid_points: int = 20001, tol: float = 1e-8
) -> Maximum:
    """Grid search of ``|S(theta)|`` followed by golden-section refinement."""
    if grid_points < 10_000:
        raise ValueError("grid_points must be at least 10000")
    sys_ = _resolve(system)
    lo, hi = sys_.default_range
    lo = lo if start is None else start
    hi = hi if stop is None else stop
    grid = np.linspace(lo, hi, grid_points)
    values = np.abs(s_of_theta(sys_, grid))
    i = int(np.argmax(values))
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    f = lambda t: float(abs(s_of_theta(sys_, t)))
    best = golden_section_max(f, left, right, tol)
    if f(best) < values[i]:
        best = float(grid[i])
    return Maximum(float(best), f(best))


def violation_boundary(system, start: float | None = None, stop: float | None = None, grid_points: int = 20001) -> float | None:
    """Largest parameter at which ``|S|`` falls back through 2, or None if it never exceeds 2."""
    sys_ = _resolve(system)
    lo, hi = sys_.default_range
    grid = np.linspace(lo if start is None else start, hi if stop is None else stop, grid_points)
    excess = np.abs(s_of_theta(sys_, grid)) - 2.0
    down = np.nonzero((excess[:-1] > 0) & (excess[1:] <= 0))[0]
    if down.size == 0:
        return None
    i = int(down[-1])
    root = brentq(lambda t: float(abs(s_of_theta(sys_, t))) - 2.0, grid[i], grid[i + 1], xtol=1e-14)
    return float(root)


# ---------------------------------------------------------------- local hidden variables


@dataclass(frozen=True)
class LhvStrategy:
    """Predetermined outcomes for Alice's settings a, a' and Bob's b, b'."""

    mu_a: int
    mu_a_prime: int
    mu_b: int
    mu_b_prime: int

    def correlations(self) -> tuple[int, int, int, int]:
        """Outcome products for the CHSH setting pairs."""
        return (
            self.mu_a * self.mu_b,
            self.mu_a * self.mu_b_prime,
            self.mu_a_prime * self.mu_b,
            self.mu_a_prime * self.mu_b_prime,
        )

    @property
    def S(self) -> int:
        return sum(s * c for s, c in zip(CHSH_SIGNS, self.correlations()))


def all_strategies() -> list[LhvStrategy]:
    return [LhvStrategy(*mu) for mu in itertools.product((1, -1), repeat=4)]


def _check_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (16,):
        raise DomainError("need one weight per deterministic strategy (16)")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise DomainError("weights must be non-negative and sum to 1")
    return w


def lhv_correlations(weights: Sequence[float]) -> np.ndarray:
    """Mixture correlations for the four CHSH setting pairs."""
    w = _check_weights(weights)
    table = np.array([s.correlations() for s in all_strategies()], dtype=float)
    return w @ table


def lhv_bound(weights: Sequence[float]) -> float:
    """CHSH value of a mixture of deterministic strategies; always in [-2, 2]."""
    return float(np.dot(CHSH_SIGNS, lhv_correlations(weights)))

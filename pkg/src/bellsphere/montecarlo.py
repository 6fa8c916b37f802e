"""Monte Carlo coincidence counting with channel loss and detector inefficiency.

Each emitted pair ends in exactly one of seven categories: a coincidence
``(+,+)``, ``(+,-)``, ``(-,+)``, ``(-,-)``, a single click on one arm, or no
click at all.  A particle removed by its channel (PDL absorption, decay before
the measurement time) never reaches its detector; a particle that does reach
it is registered with probability ``efficiency``, independently per arm.

Random streams
--------------
Pairs are grouped in blocks of :data:`BLOCK_SIZE` consecutive indices.  Pair
``i`` of setting pair ``k`` is drawn from the generator
``default_rng(SeedSequence(seed, spawn_key=(k, i // BLOCK_SIZE)))``.  Blocks
are independent, so any partition of whole blocks across workers reproduces
the sequential result exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from .channels import BMesonSpec, KaonSpec, bmeson_evolution_operator, kaon_evolution_operator
from .correlations import CHSH_SIGNS, Settings4, all_strategies
from .errors import DomainError, InsufficientDataError
from .states import CIRCULAR, IDENTITY, MASS, element_bloch, equatorial, projector, singlet

BLOCK_SIZE = 1 << 16
MC_SYSTEMS = ("photon", "kaon", "bmeson", "lhv")


@dataclass(frozen=True)
class CoincidenceCounts:
    n_pp: int = 0
    n_pm: int = 0
    n_mp: int = 0
    n_mm: int = 0
    n_single_a: int = 0
    n_single_b: int = 0
    n_lost: int = 0

    def __add__(self, other: CoincidenceCounts) -> CoincidenceCounts:
        return CoincidenceCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))

    @property
    def coincidences(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    @property
    def total(self) -> int:
        return sum(self.as_tuple())


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo run.

    ``settings`` is either a ``(setting_a, setting_b)`` pair or a
    :class:`Settings4`.  Photon settings are analyzer angles on the sphere
    (radians); kaon and B-meson settings are measurement times.  For
    ``system="lhv"`` the pair values are ignored and outcomes come from the
    strategy mixture ``lhv_weights``.
    """

    system: str
    settings: tuple[float, float] | Settings4
    pairs: int
    efficiency: float = 1.0
    seed: int = 0
    channel_a: np.ndarray | None = None
    channel_b: np.ndarray | None = None
    kaon: KaonSpec = field(default_factory=KaonSpec)
    bmeson: BMesonSpec = field(default_factory=BMesonSpec)
    lhv_weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.system not in MC_SYSTEMS:
            raise DomainError(f"unknown system {self.system!r}")
        if self.pairs < 1:
            raise DomainError("need at least one pair")
        if not 0.0 < self.efficiency <= 1.0:
            raise DomainError("efficiency must lie in (0, 1]")
        if self.system == "lhv" and self.lhv_weights is None:
            raise DomainError("lhv system needs lhv_weights")
        if self.system in ("kaon", "bmeson"):
            values = self.settings.pairs() if isinstance(self.settings, Settings4) else [self.settings]
            if any(t < 0 for pair in values for t in pair):
                raise DomainError("measurement times must be non-negative")


# ---------------------------------------------------------------- outcome model


def _arm(config: ExperimentConfig, setting: float, channel: np.ndarray | None):
    if config.system == "photon":
        return equatorial(setting), IDENTITY if channel is None else np.asarray(channel, dtype=complex)
    if config.system == "kaon":
        return element_bloch("K0"), kaon_evolution_operator(config.kaon, setting)
    return element_bloch("K0"), bmeson_evolution_operator(config.bmeson, setting)


def _arm_effects(axis, op) -> list[np.ndarray]:
    """POVM of one arm: outcome +, outcome -, particle removed by the channel."""
    p = projector(axis)
    keep = op.conj().T @ op
    return [op.conj().T @ p @ op, op.conj().T @ (IDENTITY - p) @ op, IDENTITY - keep]


def outcome_table(config: ExperimentConfig, setting_a: float, setting_b: float, pair_index: int = 0) -> np.ndarray:
    """3x3 probabilities; rows Alice (+, -, removed), columns Bob (+, -, removed)."""
    if config.system == "lhv":
        return _lhv_table(config.lhv_weights, pair_index)
    axis_a, op_a = _arm(config, setting_a, config.channel_a)
    axis_b, op_b = _arm(config, setting_b, config.channel_b)
    psi = singlet(CIRCULAR if config.system == "photon" else MASS).amplitudes
    table = np.empty((3, 3))
    for i, ea in enumerate(_arm_effects(axis_a, op_a)):
        for j, eb in enumerate(_arm_effects(axis_b, op_b)):
            table[i, j] = np.vdot(psi, np.kron(ea, eb) @ psi).real
    table = np.clip(table, 0.0, None)
    return table / table.sum()


def _lhv_table(weights, pair_index: int) -> np.ndarray:
    """Outcome table of a strategy mixture for CHSH pair ``pair_index``."""
    table = np.zeros((3, 3))
    for w, strat in zip(weights, all_strategies()):
        mu_a = strat.mu_a if pair_index in (0, 1) else strat.mu_a_prime
        mu_b = strat.mu_b if pair_index in (0, 2) else strat.mu_b_prime
        table[(1 - mu_a) // 2, (1 - mu_b) // 2] += w
    return table


# ---------------------------------------------------------------- sampling


def block_rng(seed: int, pair_index: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(pair_index, block)))


def _sample_block(table: np.ndarray, efficiency: float, n: int, rng: np.random.Generator) -> CoincidenceCounts:
    cells = rng.multinomial(n, table.ravel()).reshape(3, 3)
    eta = efficiency
    both = [eta * eta, eta * (1 - eta), (1 - eta) * eta, (1 - eta) * (1 - eta)]
    coinc = np.zeros((2, 2), dtype=np.int64)
    single_a = single_b = lost = 0
    for i in range(2):
        for j in range(2):
            c, sa, sb, nl = rng.multinomial(cells[i, j], both)
            coinc[i, j] += c
            single_a += sa
            single_b += sb
            lost += nl
    for i in range(2):
        k = rng.binomial(cells[i, 2], eta)
        single_a += k
        lost += cells[i, 2] - k
    for j in range(2):
        k = rng.binomial(cells[2, j], eta)
        single_b += k
        lost += cells[2, j] - k
    lost += cells[2, 2]
    return CoincidenceCounts(
        int(coinc[0, 0]), int(coinc[0, 1]), int(coinc[1, 0]), int(coinc[1, 1]),
        int(single_a), int(single_b), int(lost),
    )


def _run_pair(config: ExperimentConfig, pair_index: int, setting_a: float, setting_b: float, n: int, workers: int) -> CoincidenceCounts:
    table = outcome_table(config, setting_a, setting_b, pair_index)
    n_blocks = -(-n // BLOCK_SIZE)

    def block(b: int) -> CoincidenceCounts:
        size = min(BLOCK_SIZE, n - b * BLOCK_SIZE)
        return _sample_block(table, config.efficiency, size, block_rng(config.seed, pair_index, b))

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    total = CoincidenceCounts()
    for part in parts:
        total = total + part
    return total


def run_experiment(config: ExperimentConfig, workers: int = 1) -> CoincidenceCounts:
    """Counts for a single setting pair."""
    if isinstance(config.settings, Settings4):
        raise DomainError("run_experiment takes a single setting pair; use run_settings")
    a, b = config.settings
    return _run_pair(config, 0, a, b, config.pairs, workers)


def split_pairs(total: int, parts: int = 4) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if k < extra else 0) for k in range(parts)]


def run_settings(config: ExperimentConfig, workers: int = 1) -> list[CoincidenceCounts]:
    """Counts for the four CHSH setting pairs, pairs split evenly between them."""
    if not isinstance(config.settings, Settings4):
        return [run_experiment(config, workers)]
    shares = split_pairs(config.pairs)
    return [
        _run_pair(config, k, a, b, n, workers) if n else CoincidenceCounts()
        for k, ((a, b), n) in enumerate(zip(config.settings.pairs(), shares))
    ]


# ---------------------------------------------------------------- estimators


class Estimate(NamedTuple):
    value: float
    se: float


def estimate_E(counts: CoincidenceCounts) -> Estimate:
    """Normalized correlation over coincidences and its binomial standard error."""
    n = counts.coincidences
    if n == 0:
        raise InsufficientDataError("no coincidences recorded")
    e = (counts.n_pp + counts.n_mm - counts.n_pm - counts.n_mp) / n
    return Estimate(e, math.sqrt(max(0.0, 1.0 - e * e) / n))


@dataclass(frozen=True)
class ChshEstimate:
    S: float
    se: float
    correlations: tuple[Estimate, ...]
    counts: tuple[CoincidenceCounts, ...]

    @property
    def abs_S(self) -> float:
        return abs(self.S)


def combine_chsh(counts: list[CoincidenceCounts]) -> ChshEstimate:
    estimates = tuple(estimate_E(c) for c in counts)
    s = sum(sign * e.value for sign, e in zip(CHSH_SIGNS, estimates))
    se = math.sqrt(sum(e.se ** 2 for e in estimates))
    return ChshEstimate(s, se, estimates, tuple(counts))


def estimate_chsh(config: ExperimentConfig, workers: int = 1) -> ChshEstimate:
    if not isinstance(config.settings, Settings4):
        raise DomainError("estimate_chsh needs four settings")
    return combine_chsh(run_settings(config, workers))


def alice_plus_fraction(counts: CoincidenceCounts) -> Estimate:
    """Fraction of Alice's coincidence outcomes that are +1, with its standard error."""
    n = counts.coincidences
    if n == 0:
        raise InsufficientDataError("no coincidences recorded")
    p = (counts.n_pp + counts.n_pm) / n
    return Estimate(p, math.sqrt(p * (1 - p) / n))

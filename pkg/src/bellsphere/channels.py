"""Evolution operators: birefringence, polarization-dependent loss, kaon and B-meson.

Every operator is a ``(2, 2)`` complex array acting on pole-basis amplitudes
(see :mod:`bellsphere.states`).  Lengths and times start at zero; kaon times
are measured in units of ``1 / gamma_s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateStateError, DomainError
from .states import (
    IDENTITY,
    PAULI,
    SIGMA_Z,
    SOUTH,
    ZERO_WEIGHT,
    BlochVector,
    _require_unit,
    Spinor,
    bloch_to_spinor,
    projector,
    spinor_to_bloch,
)

KAON_DELTA_M = 0.477
KAON_GAMMA_L = 1.0 / 580.0
BMESON_DELTA_M = 0.723


@dataclass(frozen=True)
class BirefringenceSpec:
    axis: BlochVector
    rate: float
    length: float = 1.0

    def __post_init__(self) -> None:
        _require_unit(self.axis)
        if self.rate < 0 or self.length < 0:
            raise DomainError("birefringence rate and length must be non-negative")

    @property
    def angle(self) -> float:
        return self.rate * self.length


@dataclass(frozen=True)
class PdlSpec:
    """Polarization-dependent loss along ``axis``.

    ``|+axis>`` is transmitted with ``t_max = exp(-alpha_max * length)`` and
    ``|-axis>`` with ``t_min = exp(-alpha_min * length)``, so
    ``alpha_max <= alpha_min``.
    """

    axis: BlochVector
    alpha_max: float
    alpha_min: float
    length: float = 1.0

    def __post_init__(self) -> None:
        _require_unit(self.axis)
        if self.alpha_max < 0 or self.alpha_min < 0 or self.length < 0:
            raise DomainError("attenuations and length must be non-negative")
        if self.alpha_max > self.alpha_min:
            raise DomainError("t_max >= t_min requires alpha_max <= alpha_min")

    @classmethod
    def from_transmissions(cls, axis: BlochVector, t_max: float, t_min: float) -> PdlSpec:
        """Unit-length spec with the given intensity transmissions (``t_min`` may be 0)."""
        if not 0.0 <= t_min <= t_max <= 1.0 or t_max == 0.0:
            raise DomainError("need 0 <= t_min <= t_max <= 1 and t_max > 0")
        alpha = lambda t: math.inf if t == 0.0 else -math.log(t)
        return cls(axis, alpha(t_max), alpha(t_min), 1.0)

    @staticmethod
    def _transmission(alpha: float, length: float) -> float:
        if length == 0.0:
            return 1.0
        return math.exp(-alpha * length)

    @property
    def t_max(self) -> float:
        return self._transmission(self.alpha_max, self.length)

    @property
    def t_min(self) -> float:
        return self._transmission(self.alpha_min, self.length)


@dataclass(frozen=True)
class KaonSpec:
    """Neutral-kaon constants in units where ``gamma_s = 1``.

    ``delta_m`` is ``m_S - m_L``; ``mean_mass`` is ``(m_S + m_L) / 2`` and
    only contributes a global phase.
    """

    delta_m: float = KAON_DELTA_M
    gamma_s: float = 1.0
    gamma_l: float = KAON_GAMMA_L
    mean_mass: float = 0.0

    def __post_init__(self) -> None:
        if not self.gamma_s >= self.gamma_l >= 0.0:
            raise DomainError("need gamma_s >= gamma_l >= 0")

    @property
    def gamma(self) -> float:
        return 0.5 * (self.gamma_s + self.gamma_l)

    @property
    def m_s(self) -> float:
        return self.mean_mass + 0.5 * self.delta_m

    @property
    def m_l(self) -> float:
        return self.mean_mass - 0.5 * self.delta_m


@dataclass(frozen=True)
class BMesonSpec:
    """B-meson pair: equal widths, ``delta_m`` in units of ``1 / tau_B``."""

    delta_m: float = BMESON_DELTA_M
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise DomainError("gamma must be non-negative")

    def as_kaon_spec(self) -> KaonSpec:
        return KaonSpec(delta_m=self.delta_m, gamma_s=self.gamma, gamma_l=self.gamma)


# ---------------------------------------------------------------- geometry


def rotation_matrix(axis: BlochVector, angle: float) -> np.ndarray:
    """Right-handed 3x3 rotation by ``angle`` about ``axis`` (Rodrigues)."""
    n = axis.as_array() / axis.norm
    k = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def spin_rotation(axis: BlochVector, angle: float) -> np.ndarray:
    """``exp(-i angle axis.sigma / 2)``."""
    _require_unit(axis)
    n_sigma = np.tensordot(axis.as_array(), PAULI, axes=1)
    return math.cos(angle / 2) * IDENTITY - 1j * math.sin(angle / 2) * n_sigma


def bloch_map(op: np.ndarray, m: BlochVector) -> tuple[BlochVector, float]:
    """Push a pure state through ``op``: renormalized image and surviving weight."""
    out = Spinor.from_array(op @ bloch_to_spinor(m).as_array())
    w = out.weight
    if w <= ZERO_WEIGHT:
        raise DegenerateStateError(f"state {m} is fully absorbed")
    return spinor_to_bloch(out), w


# ---------------------------------------------------------------- photon channels


def birefringence_operator(spec: BirefringenceSpec) -> np.ndarray:
    """Unitary rotating the sphere by ``rate * length`` about ``axis``."""
    return spin_rotation(spec.axis, spec.angle)


def pdl_operator(spec: PdlSpec) -> np.ndarray:
    """``sqrt(t_max) P(+axis) + sqrt(t_min) P(-axis)``."""
    p_plus = projector(spec.axis)
    return math.sqrt(spec.t_max) * p_plus + math.sqrt(spec.t_min) * (IDENTITY - p_plus)


def pdl_generator(spec: PdlSpec) -> np.ndarray:
    """Generator ``G`` with ``d/dz |m> = G |m>`` for finite attenuations."""
    p_plus = projector(spec.axis)
    return -0.5 * (spec.alpha_max * p_plus + spec.alpha_min * (IDENTITY - p_plus))


def pdl_evolve_bloch(m: BlochVector, spec: PdlSpec) -> tuple[BlochVector, float]:
    """Renormalized state after the loss element, plus its transmitted weight."""
    _require_unit(m)
    return bloch_map(pdl_operator(spec), m)


def fiber_operator(biref: BirefringenceSpec, pdl: PdlSpec) -> np.ndarray:
    """Simultaneous birefringence and loss over a common length.

    With a shared axis the two factors commute and this equals their product.
    """
    if not math.isclose(biref.length, pdl.length, rel_tol=0, abs_tol=1e-15):
        raise DomainError("birefringence and PDL lengths differ")
    if math.isinf(pdl.alpha_min):
        raise DomainError("infinite attenuation has no generator; compose operators instead")
    beta_sigma = np.tensordot(biref.axis.as_array(), PAULI, axes=1) * biref.rate
    gen = -0.5j * beta_sigma + pdl_generator(pdl)
    return expm(gen * biref.length)


# ---------------------------------------------------------------- massive systems


def _check_time(t: float) -> None:
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")


def kaon_phase(spec: KaonSpec, t: float) -> complex:
    return complex(np.exp(-1j * spec.mean_mass * t))


def kaon_rotation(spec: KaonSpec, t: float) -> np.ndarray:
    """Strangeness-mixing factor ``exp(-i (m_S - m_L) t sigma_3 / 2)``."""
    return expm_diag(-0.5j * spec.delta_m * t * np.diag(SIGMA_Z).real)


def kaon_contraction(spec: KaonSpec, t: float) -> np.ndarray:
    """Decay factor ``diag(exp(-gamma_s t / 2), exp(-gamma_l t / 2))``."""
    return expm_diag(-0.5 * t * np.array([spec.gamma_s, spec.gamma_l]))


def expm_diag(diag) -> np.ndarray:
    return np.diag(np.exp(np.asarray(diag, dtype=complex)))


def kaon_evolution_operator(spec: KaonSpec, t: float) -> np.ndarray:
    """``diag(exp(-(i m_S + gamma_s/2) t), exp(-(i m_L + gamma_l/2) t))`` in (K_S, K_L)."""
    _check_time(t)
    return np.diag(
        [
            np.exp(-(1j * spec.m_s + 0.5 * spec.gamma_s) * t),
            np.exp(-(1j * spec.m_l + 0.5 * spec.gamma_l) * t),
        ]
    )


def kaon_factors(spec: KaonSpec, t: float) -> tuple[complex, np.ndarray, np.ndarray]:
    """Global phase, rotation and contraction whose product is the kaon evolution."""
    _check_time(t)
    return kaon_phase(spec, t), kaon_rotation(spec, t), kaon_contraction(spec, t)


def kaon_decay_as_pdl(spec: KaonSpec, t: float) -> PdlSpec:
    """Loss element equivalent to kaon decay: favored axis K_L, length ``t``."""
    _check_time(t)
    return PdlSpec(SOUTH, alpha_max=spec.gamma_l, alpha_min=spec.gamma_s, length=t)


def bmeson_evolution_operator(spec: BMesonSpec, t: float) -> np.ndarray:
    _check_time(t)
    return kaon_evolution_operator(spec.as_kaon_spec(), t)


def singular_values(op: np.ndarray) -> np.ndarray:
    return np.linalg.svd(op, compute_uv=False)


# ---------------------------------------------------------------- uniform interface

@dataclass(frozen=True)
class FiberSpec:
    """Birefringence and PDL acting together; the PDL axis follows ``biref.axis``."""

    biref: BirefringenceSpec
    pdl_alpha_max: float
    pdl_alpha_min: float
    pdl_axis: BlochVector | None = field(default=None)

    def pdl(self) -> PdlSpec:
        axis = self.pdl_axis if self.pdl_axis is not None else self.biref.axis
        return PdlSpec(axis, self.pdl_alpha_max, self.pdl_alpha_min, self.biref.length)


ChannelSpec = BirefringenceSpec | PdlSpec | FiberSpec | KaonSpec | BMesonSpec


def channel_operator(spec: ChannelSpec, extent: float | None = None) -> np.ndarray:
    """Operator for any channel spec; ``extent`` overrides its length or time."""
    if isinstance(spec, BirefringenceSpec):
        if extent is not None:
            spec = BirefringenceSpec(spec.axis, spec.rate, extent)
        return birefringence_operator(spec)
    if isinstance(spec, PdlSpec):
        if extent is not None:
            spec = PdlSpec(spec.axis, spec.alpha_max, spec.alpha_min, extent)
        return pdl_operator(spec)
    if isinstance(spec, FiberSpec):
        biref = spec.biref if extent is None else BirefringenceSpec(spec.biref.axis, spec.biref.rate, extent)
        return fiber_operator(biref, FiberSpec(biref, spec.pdl_alpha_max, spec.pdl_alpha_min, spec.pdl_axis).pdl())
    if isinstance(spec, KaonSpec):
        return kaon_evolution_operator(spec, 0.0 if extent is None else extent)
    if isinstance(spec, BMesonSpec):
        return bmeson_evolution_operator(spec, 0.0 if extent is None else extent)
    raise TypeError(f"unsupported channel spec {type(spec).__name__}")


def trajectory(spec: ChannelSpec, start: BlochVector, extents) -> list[tuple[float, BlochVector, float]]:
    """Renormalized Bloch vector and surviving weight at each extent."""
    _require_unit(start)
    rows = []
    for z in extents:
        m, w = bloch_map(channel_operator(spec, float(z)), start)
        rows.append((float(z), m, w))
    return rows


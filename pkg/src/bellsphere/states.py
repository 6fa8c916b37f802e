"""Pure two-level states on the Bloch (Poincare) sphere and two-particle states.

Single-particle amplitudes are always expressed in the *pole* basis of their
system: circular (L, R) for photons and mass (K_S, K_L) for kaons.  The first
pole element sits at the north pole.  Other bases (linear, strangeness) are
real Hadamard rotations of the pole basis and sit on the x axis of the sphere.

Operators are plain ``(2, 2)`` complex numpy arrays acting on pole-basis
amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BasisMismatchError, DegenerateStateError, InvalidStateError

UNIT_TOL = 1e-9
# squared norms below this are treated as total absorption
ZERO_WEIGHT = 1e-24

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class BlochVector:
    """Point on (or inside) the unit sphere."""

    x: float
    y: float
    z: float

    @classmethod
    def from_angles(cls, eta: float, phi: float) -> BlochVector:
        """Build from the pole component ``eta`` in [-1, 1] and azimuth ``phi``."""
        if not -1.0 <= eta <= 1.0:
            raise InvalidStateError(f"eta={eta} outside [-1, 1]")
        r = math.sqrt(1.0 - eta * eta)
        return cls(r * math.cos(phi), r * math.sin(phi), float(eta))

    @classmethod
    def from_array(cls, arr) -> BlochVector:
        x, y, z = (float(v) for v in np.asarray(arr, dtype=float).reshape(3))
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def dot(self, other: BlochVector) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __neg__(self) -> BlochVector:
        return BlochVector(-self.x, -self.y, -self.z)


def equatorial(angle: float) -> BlochVector:
    """Unit vector on the equator at azimuth ``angle`` (radians)."""
    return BlochVector(math.cos(angle), math.sin(angle), 0.0)


NORTH = BlochVector(0.0, 0.0, 1.0)
SOUTH = BlochVector(0.0, 0.0, -1.0)


def _require_unit(m: BlochVector, tol: float = UNIT_TOL) -> None:
    if not abs(m.norm - 1.0) <= tol:
        raise InvalidStateError(f"Bloch vector {m} has norm {m.norm}, expected 1")


@dataclass(frozen=True)
class Spinor:
    """Amplitude pair in the pole basis.

    Spinors coming out of lossy channels are not renormalized; ``weight`` is
    their squared norm, i.e. the surviving probability.
    """

    c_up: complex
    c_down: complex

    @classmethod
    def from_array(cls, arr) -> Spinor:
        a = np.asarray(arr, dtype=complex).reshape(2)
        return cls(complex(a[0]), complex(a[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.c_up, self.c_down], dtype=complex)

    @property
    def weight(self) -> float:
        return abs(self.c_up) ** 2 + abs(self.c_down) ** 2

    def normalized(self) -> Spinor:
        w = self.weight
        if w == 0.0:
            raise InvalidStateError("cannot normalize the zero spinor")
        s = math.sqrt(w)
        return Spinor(self.c_up / s, self.c_down / s)


def same_ray(s1: Spinor, s2: Spinor, tol: float = 1e-12) -> bool:
    """True when two normalized spinors agree up to a global phase."""
    return abs(abs(np.vdot(s1.as_array(), s2.as_array())) - 1.0) <= tol


def bloch_to_spinor(m: BlochVector) -> Spinor:
    """Spinor ``(sqrt((1+eta)/2) e^{-i phi/2}, sqrt((1-eta)/2) e^{+i phi/2})``."""
    _require_unit(m)
    eta = min(1.0, max(-1.0, m.z / m.norm))
    phi = math.atan2(m.y, m.x)
    half = np.exp(-0.5j * phi)
    return Spinor(
        math.sqrt((1.0 + eta) / 2.0) * half,
        math.sqrt((1.0 - eta) / 2.0) * half.conjugate(),
    )


def projector(m: BlochVector) -> np.ndarray:
    """Rank-one projector ``(I + m.sigma) / 2`` onto the state ``m``."""
    _require_unit(m)
    return 0.5 * (IDENTITY + np.tensordot(m.as_array(), PAULI, axes=1))


def spinor_to_bloch(s: Spinor) -> BlochVector:
    """Pauli expectation values of the (renormalized) spinor."""
    if s.weight == 0.0:
        raise InvalidStateError("zero spinor has no Bloch vector")
    v = s.normalized().as_array()
    return BlochVector.from_array([np.vdot(v, p @ v).real for p in PAULI])


def bloch_from_projector(p: np.ndarray) -> BlochVector:
    """Bloch vector from ``Tr(sigma P)``; second route to :func:`spinor_to_bloch`."""
    tr = np.trace(p).real
    if tr == 0.0:
        raise InvalidStateError("zero operator has no Bloch vector")
    return BlochVector.from_array([np.trace(s @ p).real / tr for s in PAULI])


def overlap(m1: BlochVector, m2: BlochVector) -> float:
    """Transition probability ``|<m1|m2>|^2`` computed from spinors."""
    s1, s2 = bloch_to_spinor(m1), bloch_to_spinor(m2)
    return abs(np.vdot(s1.as_array(), s2.as_array())) ** 2


# ---------------------------------------------------------------- bases

_ELEMENTS = {
    ("photon", "circular"): ("L", "R"),
    ("photon", "linear"): ("V", "H"),
    ("kaon", "mass"): ("K_S", "K_L"),
    ("kaon", "strangeness"): ("K0", "K0bar"),
}
_POLE_AXIS = {"photon": "circular", "kaon": "mass"}

# pole-basis coordinates; real by construction, no factor of i needed
_R2 = 1.0 / math.sqrt(2.0)
_ELEMENT_VECTORS = {
    "L": np.array([1.0, 0.0]),
    "R": np.array([0.0, 1.0]),
    "V": np.array([_R2, _R2]),
    "H": np.array([_R2, -_R2]),
    "K_S": np.array([1.0, 0.0]),
    "K_L": np.array([0.0, 1.0]),
    "K0": np.array([_R2, _R2]),
    "K0bar": np.array([_R2, -_R2]),
}

# element pair written first in each singlet expression, (first, second) - (second, first)
_SINGLET_ORDER = {
    ("photon", "circular"): ("L", "R"),
    ("photon", "linear"): ("H", "V"),
    ("kaon", "mass"): ("K_L", "K_S"),
    ("kaon", "strangeness"): ("K0", "K0bar"),
}


@dataclass(frozen=True)
class BasisLabel:
    system: str
    axis: str

    def __post_init__(self) -> None:
        if (self.system, self.axis) not in _ELEMENTS:
            raise ValueError(f"unknown basis {self.system}/{self.axis}")

    @property
    def elements(self) -> tuple[str, str]:
        return _ELEMENTS[(self.system, self.axis)]

    @property
    def is_pole(self) -> bool:
        return _POLE_AXIS[self.system] == self.axis

    @property
    def pole(self) -> BasisLabel:
        return BasisLabel(self.system, _POLE_AXIS[self.system])

    def matrix(self) -> np.ndarray:
        """Columns are the basis elements in pole coordinates."""
        return np.column_stack([_ELEMENT_VECTORS[e] for e in self.elements]).astype(complex)

    def index(self, element: str) -> int:
        try:
            return self.elements.index(element)
        except ValueError:
            raise KeyError(f"{element!r} is not an element of {self}") from None


CIRCULAR = BasisLabel("photon", "circular")
LINEAR = BasisLabel("photon", "linear")
MASS = BasisLabel("kaon", "mass")
STRANGENESS = BasisLabel("kaon", "strangeness")


def element_bloch(name: str) -> BlochVector:
    """Sphere point of a named basis element, e.g. ``"V"`` -> (1, 0, 0)."""
    return spinor_to_bloch(Spinor.from_array(_ELEMENT_VECTORS[name]))


def _change_matrix(from_: BasisLabel, to: BasisLabel) -> np.ndarray:
    if from_.system != to.system:
        raise BasisMismatchError(f"cannot map {from_.system} basis to {to.system} basis")
    return to.matrix().conj().T @ from_.matrix()


def basis_change(s: Spinor, from_: BasisLabel, to: BasisLabel) -> Spinor:
    """Re-express coordinates of ``s`` given in ``from_`` in the basis ``to``."""
    return Spinor.from_array(_change_matrix(from_, to) @ s.as_array())


# ---------------------------------------------------------------- two particles


class JointState:
    """Two-particle amplitudes over the product of one basis with itself.

    Amplitude index ``2 * i + j`` belongs to element ``i`` of particle 1 and
    element ``j`` of particle 2, in the order given by ``basis.elements``.
    """

    __slots__ = ("_amps", "basis")

    def __init__(self, amplitudes, basis: BasisLabel) -> None:
        amps = np.array(amplitudes, dtype=complex).reshape(4)
        amps.setflags(write=False)
        self._amps = amps
        self.basis = basis

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def weight(self) -> float:
        return float(np.vdot(self._amps, self._amps).real)

    def amplitude(self, first: str, second: str) -> complex:
        return complex(self._amps[2 * self.basis.index(first) + self.basis.index(second)])

    def in_basis(self, basis: BasisLabel) -> JointState:
        if basis == self.basis:
            return self
        m = _change_matrix(self.basis, basis)
        return JointState(np.kron(m, m) @ self._amps, basis)

    def __repr__(self) -> str:
        return f"JointState({self._amps.tolist()}, {self.basis.system}/{self.basis.axis})"


def singlet(basis: BasisLabel) -> JointState:
    """Antisymmetric singlet written in ``basis``."""
    first, second = _SINGLET_ORDER[(basis.system, basis.axis)]
    amps = np.zeros(4, dtype=complex)
    i, j = basis.index(first), basis.index(second)
    amps[2 * i + j] = _R2
    amps[2 * j + i] = -_R2
    return JointState(amps, basis)


def apply_local(j: JointState, op_a: np.ndarray, op_b: np.ndarray) -> JointState:
    """Apply ``op_a`` to particle 1 and ``op_b`` to particle 2; no renormalization.

    Operators act on pole-basis amplitudes, so the result is in the pole basis.
    """
    pole = j.in_basis(j.basis.pole)
    return JointState(np.kron(op_a, op_b) @ pole.amplitudes, pole.basis)


class JointProbabilities(NamedTuple):
    pp: float
    pm: float
    mp: float
    mm: float
    lost: float

    @property
    def detected(self) -> float:
        return self.pp + self.pm + self.mp + self.mm

    @property
    def correlation(self) -> float:
        """Unnormalized ``sum_st s*t*P_st``."""
        return self.pp + self.mm - self.pm - self.mp


def joint_probabilities(j: JointState, a: BlochVector, b: BlochVector) -> JointProbabilities:
    """Probabilities of outcomes along ``+-a`` (particle 1) and ``+-b`` (particle 2)."""
    w = j.weight
    if w <= 0.0:
        raise DegenerateStateError("state has zero weight")
    psi = j.in_basis(j.basis.pole).amplitudes
    pa, pb = projector(a), projector(b)
    out = []
    for qa in (pa, IDENTITY - pa):
        for qb in (pb, IDENTITY - pb):
            out.append(float(np.vdot(psi, np.kron(qa, qb) @ psi).real))
    return JointProbabilities(*out, lost=max(0.0, 1.0 - w))


def conditional_state(
    j: JointState, outcome_axis: BlochVector, outcome_sign: int
) -> tuple[Spinor, float]:
    """State of particle 2 after particle 1 is found along ``sign * axis``.

    Returns the normalized particle-2 spinor and the probability of the branch.
    """
    if outcome_sign not in (1, -1):
        raise ValueError("outcome_sign must be +1 or -1")
    axis = outcome_axis if outcome_sign == 1 else -outcome_axis
    bra = bloch_to_spinor(axis).as_array().conj()
    psi = j.in_basis(j.basis.pole).amplitudes.reshape(2, 2)
    rest = Spinor.from_array(bra @ psi)
    prob = rest.weight
    if prob <= ZERO_WEIGHT:
        raise DegenerateStateError("measurement branch has zero probability")
    return rest.normalized(), prob

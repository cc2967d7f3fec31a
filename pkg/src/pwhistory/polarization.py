"""Qubit polarization algebra: Stokes, Bloch, density matrices and pure states.

The Stokes-to-Pauli axis assignment is fixed here and nowhere else:

    S1 <-> <sigma_z>,  S2 <-> <sigma_x>,  S3 <-> <sigma_y>

so a Bloch vector ``(x, y, z)`` is ``(S2, S3, S1) / S0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import BelowPurityThreshold, InvalidState, InvalidStokes

STOKES_SLACK = 1e-9
BLOCH_SLACK = 1e-9
STATE_TOL = 1e-12
PHASE_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
AXES = ("x", "y", "z")

# Pauli axis read by each of the Stokes components S1, S2, S3.
STOKES_AXES = ("z", "x", "y")

# r_bloch = STOKES_TO_BLOCH @ (S1, S2, S3)
STOKES_TO_BLOCH = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)


def _check_axis_convention():
    for k, axis in enumerate(STOKES_AXES):
        e = np.zeros(3)
        e[k] = 1.0
        assert AXES[int(np.argmax(STOKES_TO_BLOCH @ e))] == axis


_check_axis_convention()


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        vals = (self.s0, self.s1, self.s2, self.s3)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidStokes(f"non-finite Stokes component in {vals}")
        if self.s0 <= 0:
            raise InvalidStokes(f"S0 must be positive, got {self.s0}")
        if self.degree_of_polarization > 1 + STOKES_SLACK:
            raise InvalidStokes(
                f"degree of polarization {self.degree_of_polarization:.6g} > 1"
            )

    @property
    def degree_of_polarization(self) -> float:
        return math.sqrt(self.s1**2 + self.s2**2 + self.s3**2) / self.s0

    def as_array(self) -> np.ndarray:
        return np.array([self.s0, self.s1, self.s2, self.s3], dtype=float)

    @classmethod
    def from_array(cls, values) -> "StokesVector":
        v = np.asarray(values, dtype=float).reshape(4)
        return cls(*(float(x) for x in v))


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.norm > 1 + BLOCH_SLACK:
            raise InvalidState(f"Bloch vector norm {self.norm:.12g} exceeds 1")

    @property
    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(self.norm - 1.0) <= tol

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values) -> "BlochVector":
        v = np.asarray(values, dtype=float).reshape(3)
        return cls(float(v[0]), float(v[1]), float(v[2]))


def canonical_phase(vec) -> np.ndarray:
    """Rotate the global phase so the first non-negligible entry is real >= 0."""
    v = np.asarray(vec, dtype=complex).ravel().copy()
    for entry in v:
        if abs(entry) > PHASE_TOL:
            return v * (abs(entry) / entry)
    return v


@dataclass(frozen=True)
class PureQubit:
    """Pure polarization state ``a|H> + b|V>`` stored in canonical phase."""

    a: complex
    b: complex

    def __post_init__(self):
        norm2 = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm2 - 1.0) > STATE_TOL:
            raise InvalidState(f"state norm^2 {norm2!r} differs from 1")
        a, b = canonical_phase([self.a, self.b])
        object.__setattr__(self, "a", complex(a))
        object.__setattr__(self, "b", complex(b))

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> "PureQubit":
        v = np.asarray(vec, dtype=complex).ravel()
        if v.shape != (2,):
            raise InvalidState(f"expected 2 amplitudes, got shape {v.shape}")
        if normalize:
            n = np.linalg.norm(v)
            if n == 0:
                raise InvalidState("zero vector cannot be normalized")
            v = v / n
        return cls(complex(v[0]), complex(v[1]))

    @classmethod
    def from_bloch(cls, r: Union[BlochVector, np.ndarray]) -> "PureQubit":
        r = _bloch_array(r)
        n = np.linalg.norm(r)
        if abs(n - 1.0) > 1e-9:
            raise InvalidState(f"Bloch vector of norm {n!r} is not pure")
        x, y, z = r / n
        # rho = [[(1+z)/2, (x-iy)/2], [(x+iy)/2, (1-z)/2]] = [[|a|^2, a b*], [a* b, |b|^2]]
        if z >= 0:
            a = math.sqrt((1 + z) / 2)
            b = complex(x, y) / (2 * a)
        else:
            b = math.sqrt((1 - z) / 2)
            a = complex(x, -y) / (2 * b)
        return cls.from_vector([a, b], normalize=True)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=complex)

    def density(self) -> "QubitState":
        v = self.vector
        return QubitState(np.outer(v, v.conj()))

    def bloch(self) -> BlochVector:
        return density_to_bloch(self.density())


H = PureQubit(1, 0)
V = PureQubit(0, 1)


@dataclass(frozen=True, eq=False)
class QubitState:
    """2x2 density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        if rho.shape != (2, 2):
            raise InvalidState(f"density matrix must be 2x2, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > STATE_TOL:
            raise InvalidState(f"density matrix trace {np.trace(rho)} != 1")
        if np.linalg.eigvalsh(rho).min() < -STATE_TOL:
            raise InvalidState("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order, floored and clamped to [0, 1]."""
        lam = np.linalg.eigvalsh(self.matrix)[::-1]
        return np.clip(lam, 0.0, 1.0)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def _bloch_array(r) -> np.ndarray:
    if isinstance(r, BlochVector):
        return r.as_array()
    return np.asarray(r, dtype=float).reshape(3)


def stokes_to_bloch(s: StokesVector) -> BlochVector:
    if s.s0 <= 0:
        raise InvalidStokes(f"S0 must be positive, got {s.s0}")
    r = STOKES_TO_BLOCH @ np.array([s.s1, s.s2, s.s3]) / s.s0
    return BlochVector.from_array(r)


def bloch_to_stokes(r: BlochVector, intensity: float = 1.0) -> StokesVector:
    s = STOKES_TO_BLOCH.T @ _bloch_array(r)
    return StokesVector(intensity, *(float(intensity * c) for c in s))


def bloch_to_density(r: Union[BlochVector, np.ndarray]) -> QubitState:
    x, y, z = _bloch_array(r)
    if math.sqrt(x * x + y * y + z * z) > 1 + BLOCH_SLACK:
        raise InvalidState("Bloch vector norm exceeds 1")
    return QubitState(0.5 * (I2 + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z))


def density_to_bloch(rho: QubitState) -> BlochVector:
    m = rho.matrix
    return BlochVector(
        *(float(np.real(np.trace(m @ PAULI[a]))) for a in AXES)
    )


def purify(r: Union[BlochVector, np.ndarray], min_norm: float = 0.9) -> PureQubit:
    """Pure state along ``r / |r|``.

    Raises :class:`BelowPurityThreshold` when ``|r| < min_norm``: such data is
    too depolarized to stand in for a pure history entry.
    """
    v = _bloch_array(r)
    n = float(np.linalg.norm(v))
    if n < min_norm or n == 0:
        raise BelowPurityThreshold(n, min_norm)
    return PureQubit.from_bloch(v / n)


def _as_density(psi) -> np.ndarray:
    if isinstance(psi, PureQubit):
        v = psi.vector
        return np.outer(v, v.conj())
    if isinstance(psi, QubitState):
        return psi.matrix
    raise TypeError(f"expected PureQubit or QubitState, got {type(psi).__name__}")


def pauli_expectation(psi: Union[PureQubit, QubitState], axis: str) -> float:
    if axis not in PAULI:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    return float(np.real(np.trace(_as_density(psi) @ PAULI[axis])))


def overlap(psi: PureQubit, phi: PureQubit) -> float:
    """``|<psi|phi>|``, clipped to [0, 1]."""
    return float(min(1.0, abs(np.vdot(psi.vector, phi.vector))))


def stokes_from_projections(
    p_h: float,
    p_v: float,
    p_d: float,
    p_a: float,
    p_r: float,
    p_l: float,
) -> StokesVector:
    """Assemble a Stokes vector from the six projection intensities.

    Arguments are, in order, P(0,0), P(pi/2,0), P(pi/4,0), P(-pi/4,0),
    P(pi/4,pi/2) and P(-pi/4,pi/2). The combination rule is applied literally,
    with every transverse component formed as a sum of its pair.
    """
    ps = (p_h, p_v, p_d, p_a, p_r, p_l)
    if any(p < 0 for p in ps):
        raise InvalidStokes(f"projections must be non-negative, got {ps}")
    return StokesVector(p_h + p_v, p_h - p_v, p_d + p_a, p_r + p_l)

"""Mueller matrices, Lu-Chipman polar decomposition and the retarder lift to SU(2).

Conventions: Mueller matrices act on Stokes vectors ``(S0, S1, S2, S3)``;
the 3x3 retarder block is expressed in Stokes axes and is permuted into Bloch
``(x, y, z)`` order (see :mod:`pwhistory.polarization`) before lifting.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDepolarizer,
    NotARotation,
    SingularDiattenuator,
    UnphysicalMatrix,
    UnphysicalOutput,
)
from .polarization import PAULI, AXES, STOKES_SLACK, STOKES_TO_BLOCH, StokesVector

ENTRY_SLACK = 1e-9
ROTATION_TOL = 1e-9
UNITARY_TOL = 1e-12
DIATTENUATION_LIMIT = 1 - 1e-9
RANK_TOL = 1e-9

_PAULI_LIST = [PAULI[a] for a in AXES]


def _frozen(a, dtype=float) -> np.ndarray:
    m = np.array(a, dtype=dtype)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class MuellerMatrix:
    """4x4 real Mueller matrix.

    Construction enforces only ``m00 > 0`` and finiteness. The entry bound and
    the Stokes-cone screen live in :func:`physicality_violations` so measured
    matrices that marginally fail them can still be loaded leniently.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise UnphysicalMatrix(f"Mueller matrix must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise UnphysicalMatrix("Mueller matrix has non-finite entries")
        if not m[0, 0] > 0:
            raise UnphysicalMatrix(f"m00 must be positive, got {m[0, 0]}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def m00(self) -> float:
        return float(self.matrix[0, 0])

    @classmethod
    def identity(cls) -> "MuellerMatrix":
        return cls(np.eye(4))


def _cone_directions() -> np.ndarray:
    dirs = [d for d in itertools.product((-1, 0, 1), repeat=3) if any(d)]
    d = np.array(dirs, dtype=float)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


CONE_DIRECTIONS = _cone_directions()


def physicality_violations(m: MuellerMatrix) -> list[str]:
    """Necessary-condition screen; an empty list means the matrix passed.

    Checks ``|m_ij| <= m00`` and that each of 26 fully polarized probe Stokes
    vectors is mapped inside the Stokes cone. This is not a full positivity
    test.
    """
    a = m.matrix
    problems = []
    worst = float(np.max(np.abs(a)))
    if worst > a[0, 0] * (1 + ENTRY_SLACK):
        problems.append(f"entry magnitude {worst:.6g} exceeds m00 {a[0, 0]:.6g}")
    probes = np.hstack([np.ones((len(CONE_DIRECTIONS), 1)), CONE_DIRECTIONS])
    out = probes @ a.T
    for d, s in zip(CONE_DIRECTIONS, out):
        if s[0] <= 0:
            problems.append(f"probe {np.round(d, 3).tolist()} maps to S0 = {s[0]:.6g}")
            break
        dop = np.linalg.norm(s[1:]) / s[0]
        if dop > 1 + STOKES_SLACK:
            problems.append(
                f"probe {np.round(d, 3).tolist()} maps outside the Stokes cone "
                f"(degree {dop:.6g})"
            )
            break
    return problems


def is_physical(m: MuellerMatrix) -> bool:
    return not physicality_violations(m)


@dataclass(frozen=True, eq=False)
class RetarderMatrix:
    """Pure retarder ``diag(1, m_R)`` with ``m_R`` in SO(3)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise NotARotation(f"retarder must be 4x4, got {m.shape}")
        border = np.concatenate([m[0, :], m[1:, 0]]) - np.array([1, 0, 0, 0, 0, 0, 0])
        if np.max(np.abs(border)) > ROTATION_TOL:
            raise NotARotation("retarder first row/column must be (1, 0, 0, 0)")
        r = m[1:, 1:]
        if np.max(np.abs(r @ r.T - np.eye(3))) > ROTATION_TOL:
            raise NotARotation("retarder block is not orthogonal")
        if abs(np.linalg.det(r) - 1) > ROTATION_TOL:
            raise NotARotation(f"retarder block determinant {np.linalg.det(r):.6g} != 1")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[1:, 1:]

    @classmethod
    def from_rotation(cls, rot) -> "RetarderMatrix":
        m = np.eye(4)
        m[1:, 1:] = rot
        return cls(m)

    def as_mueller(self) -> MuellerMatrix:
        return MuellerMatrix(self.matrix)


@dataclass(frozen=True)
class LuChipmanFactors:
    depolarizer: MuellerMatrix
    retarder: RetarderMatrix
    diattenuator: MuellerMatrix
    residual: float

    def reconstruct(self) -> np.ndarray:
        return self.depolarizer.matrix @ self.retarder.matrix @ self.diattenuator.matrix


def canonical_unitary(u) -> np.ndarray:
    """Fix the global phase: ``det U = 1`` and ``Tr U`` real non-negative.

    When the trace vanishes (half-turn rotations) the residual sign is fixed
    by making the first significant entry have positive real part, or zero
    real part and positive imaginary part.
    """
    u = np.asarray(u, dtype=complex)
    det = np.linalg.det(u)
    u = u / np.sqrt(det)
    tr = np.trace(u)
    if abs(tr) > UNITARY_TOL:
        if tr.real < 0:
            u = -u
    else:
        for entry in u.ravel():
            if abs(entry) > UNITARY_TOL:
                if entry.real < -UNITARY_TOL or (
                    abs(entry.real) <= UNITARY_TOL and entry.imag < 0
                ):
                    u = -u
                break
    return u


@dataclass(frozen=True, eq=False)
class Unitary2:
    """2x2 unitary stored in canonical phase (see :func:`canonical_unitary`)."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        if u.shape != (2, 2):
            raise NotARotation(f"unitary must be 2x2, got {u.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > UNITARY_TOL:
            raise NotARotation("matrix is not unitary")
        object.__setattr__(self, "matrix", _frozen(canonical_unitary(u), complex))

    def __matmul__(self, other):
        if isinstance(other, Unitary2):
            return Unitary2(self.matrix @ other.matrix)
        return self.matrix @ other

    @classmethod
    def identity(cls) -> "Unitary2":
        return cls(np.eye(2))


def projective_distance(u, v) -> float:
    """``min_phi ||U - e^{i phi} V||_F`` for unitaries."""
    u = np.asarray(getattr(u, "matrix", u), dtype=complex)
    v = np.asarray(getattr(v, "matrix", v), dtype=complex)
    tr = np.trace(v.conj().T @ u)
    phase = tr / abs(tr) if abs(tr) > 0 else 1.0
    return float(np.linalg.norm(u - phase * v))


def apply(m: MuellerMatrix, s: StokesVector) -> StokesVector:
    out = m.matrix @ s.as_array()
    try:
        return StokesVector.from_array(out)
    except ValueError as exc:
        raise UnphysicalOutput(f"M.S = {out.tolist()} is not a Stokes vector: {exc}") from exc


def diattenuator(d, transmittance: float = 1.0) -> MuellerMatrix:
    """Pure diattenuator with diattenuation vector ``d``."""
    d = np.asarray(d, dtype=float).reshape(3)
    dn = float(np.linalg.norm(d))
    if dn >= DIATTENUATION_LIMIT:
        raise SingularDiattenuator(f"diattenuation {dn:.12g} at the polarizer limit")
    k = math.sqrt(1 - dn * dn)
    block = k * np.eye(3)
    if dn > 0:
        block += (1 - k) * np.outer(d, d) / (dn * dn)
    m = np.empty((4, 4))
    m[0, 0] = 1.0
    m[0, 1:] = d
    m[1:, 0] = d
    m[1:, 1:] = block
    return MuellerMatrix(transmittance * m)


def _polar_3x3(mp: np.ndarray):
    """Split ``mp = m_delta @ m_rot`` with ``m_rot`` in SO(3), ``m_delta`` symmetric."""
    gram = mp.T @ mp
    w, vecs = np.linalg.eigh(gram)
    w = np.clip(w, 0.0, None)
    sig = np.sqrt(w)
    scale = max(float(sig[-1]), 1e-300)
    small = sig <= RANK_TOL * scale
    if small.sum() >= 2 or scale <= RANK_TOL:
        raise DegenerateDepolarizer(
            f"depolarizer rank {int((~small).sum())} leaves the retarder undetermined"
        )
    us = np.empty((3, 3))
    for i in range(3):
        if not small[i]:
            us[:, i] = mp @ vecs[:, i] / sig[i]
    if small[0]:
        # complete the frame; the sign is settled by the determinant rule below
        us[:, 0] = np.cross(us[:, 1], us[:, 2])
        warnings.warn(
            "rank-deficient depolarizer; retarder completed from the remaining frame",
            RuntimeWarning,
            stacklevel=3,
        )
        rot = us @ vecs.T
    else:
        # m' G^{-1/2}: insensitive to near-degenerate singular vectors
        rot = mp @ (vecs / sig) @ vecs.T
    if np.linalg.det(rot) < 0:
        rot = rot - 2.0 * np.outer(us[:, 0], vecs[:, 0])
    # re-orthogonalize against rounding drift
    uu, _, vt = np.linalg.svd(rot)
    rot = uu @ vt
    delta = mp @ rot.T
    delta = 0.5 * (delta + delta.T)
    return delta, rot


def lu_chipman(m: MuellerMatrix) -> LuChipmanFactors:
    """Polar decomposition ``M = M_delta @ M_R @ M_D``.

    The transmittance ``m00`` is carried by the diattenuator factor; the
    depolarizer has first row ``(1, 0, 0, 0)`` and a symmetric 3x3 block.
    """
    a = m.matrix
    t = a[0, 0]
    mn = a / t
    d = mn[0, 1:]
    m_d = diattenuator(d).matrix
    mp = mn @ np.linalg.inv(m_d)
    delta_block, rot = _polar_3x3(mp[1:, 1:])

    m_delta = np.eye(4)
    m_delta[1:, 0] = mp[1:, 0]
    m_delta[1:, 1:] = delta_block
    m_r = np.eye(4)
    m_r[1:, 1:] = rot

    factors_d = MuellerMatrix(t * m_d)
    recon = m_delta @ m_r @ factors_d.matrix
    residual = float(np.linalg.norm(recon - a) / np.linalg.norm(a))
    return LuChipmanFactors(
        depolarizer=MuellerMatrix(m_delta),
        retarder=RetarderMatrix(m_r),
        diattenuator=factors_d,
        residual=residual,
    )


def _rotation_to_quaternion(r: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) for a proper rotation, largest-pivot branch."""
    tr = np.trace(r)
    pivots = [tr, r[0, 0], r[1, 1], r[2, 2]]
    k = int(np.argmax(pivots))
    if k == 0:
        s = 2.0 * math.sqrt(max(1.0 + tr, 0.0))
        q = [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
    elif k == 1:
        s = 2.0 * math.sqrt(max(1.0 + r[0, 0] - r[1, 1] - r[2, 2], 0.0))
        q = [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
    elif k == 2:
        s = 2.0 * math.sqrt(max(1.0 + r[1, 1] - r[0, 0] - r[2, 2], 0.0))
        q = [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(max(1.0 + r[2, 2] - r[0, 0] - r[1, 1], 0.0))
        q = [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    return q / np.linalg.norm(q)


def stokes_rotation_to_bloch(rot) -> np.ndarray:
    p = STOKES_TO_BLOCH
    return p @ np.asarray(rot, dtype=float) @ p.T


def bloch_rotation_to_stokes(rot) -> np.ndarray:
    p = STOKES_TO_BLOCH
    return p.T @ np.asarray(rot, dtype=float) @ p


def retarder_to_unitary(r: RetarderMatrix) -> Unitary2:
    """SU(2) element whose conjugation action reproduces the retarder."""
    if not isinstance(r, RetarderMatrix):
        r = RetarderMatrix(np.asarray(r, dtype=float))
    rb = stokes_rotation_to_bloch(r.rotation)
    w, x, y, z = _rotation_to_quaternion(rb)
    u = w * np.eye(2) - 1j * (x * PAULI["x"] + y * PAULI["y"] + z * PAULI["z"])
    return Unitary2(u)


def bloch_rotation(u) -> np.ndarray:
    """``R[i, j] = Tr(sigma_i U sigma_j U^dagger) / 2`` in Bloch axes."""
    u = np.asarray(getattr(u, "matrix", u), dtype=complex)
    ud = u.conj().T
    return np.array(
        [[0.5 * np.real(np.trace(si @ u @ sj @ ud)) for sj in _PAULI_LIST] for si in _PAULI_LIST]
    )


def unitary_to_rotation(u) -> RetarderMatrix:
    return RetarderMatrix.from_rotation(bloch_rotation_to_stokes(bloch_rotation(u)))


def retarder_about(axis, angle: float) -> RetarderMatrix:
    """Retarder rotating Stokes vectors by ``angle`` about a Stokes-space ``axis``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    k = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    rot = np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)
    return RetarderMatrix.from_rotation(rot)


def jones_to_mueller(j) -> MuellerMatrix:
    """Mueller matrix of a Jones matrix in the Stokes basis used here.

    ``M_ab = Tr(s_a J s_b J^dagger) / 2`` where ``s = (I, sigma_z, sigma_x,
    sigma_y)`` follow the Stokes axis convention.
    """
    j = np.asarray(j, dtype=complex)
    basis = [np.eye(2), PAULI["z"], PAULI["x"], PAULI["y"]]
    jd = j.conj().T
    return MuellerMatrix(
        np.array([[0.5 * np.real(np.trace(a @ j @ b @ jd)) for b in basis] for a in basis])
    )

"""Discrete history states of a qubit entangled with an N-level clock.

A history state is ``(1/sqrt(N)) sum_t |psi_t>|t>``. It is stored as the N
conditional amplitude vectors; the joint 2N vector (system index major,
``index = s * N + t``) is built on demand.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConsistencyError,
    CyclicConditionViolated,
    DimensionMismatch,
    HistoryError,
    InvalidState,
)
from .polarization import AXES, PAULI, PureQubit, QubitState

NORM_TOL = 1e-12
CYCLIC_TOL = 1e-9
QUADRATIC_TOL = 1e-10
AVERAGE_TOL = 1e-12
# rounding noise below this is reported as exactly zero entanglement
NOISE_FLOOR = 1e-14


def _matrix(u) -> np.ndarray:
    m = np.asarray(getattr(u, "matrix", u), dtype=complex)
    if m.shape != (2, 2):
        raise DimensionMismatch(f"expected a 2x2 unitary, got shape {m.shape}")
    return m


def _vector(psi) -> np.ndarray:
    if isinstance(psi, PureQubit):
        return psi.vector
    return np.asarray(psi, dtype=complex).reshape(2)


@dataclass(frozen=True, eq=False)
class HistoryState:
    """Uniform-weight history state.

    ``amplitudes[t]`` is the conditional system state at clock time ``t`` with
    its phase kept (phases matter for the step-operator eigen-equation but not
    for any entropy or average). ``cyclic_phase`` records the global phase of
    the cyclic step product when built by :func:`make_history_from_steps`.
    """

    amplitudes: np.ndarray
    cyclic_phase: float = 0.0

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.ndim != 2 or a.shape[1] != 2 or a.shape[0] < 1:
            raise InvalidState(f"amplitudes must have shape (N, 2), got {a.shape}")
        norms = np.sum(np.abs(a) ** 2, axis=1)
        if np.max(np.abs(norms - 1)) > NORM_TOL:
            raise InvalidState("every conditional state must be normalized")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_states(cls, states: Sequence) -> "HistoryState":
        return cls(np.array([_vector(s) for s in states]))

    @property
    def n_clock(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def states(self) -> list[PureQubit]:
        return [PureQubit.from_vector(v) for v in self.amplitudes]

    def joint_vector(self) -> np.ndarray:
        return self.amplitudes.T.reshape(-1) / math.sqrt(self.n_clock)

    def partial(self, n: int) -> "HistoryState":
        _check_n(self, n)
        return HistoryState(self.amplitudes[:n], self.cyclic_phase)


def _check_n(psi: HistoryState, n: int):
    if not 1 <= n <= psi.n_clock:
        raise IndexError(f"n must lie in 1..{psi.n_clock}, got {n}")


@dataclass(frozen=True, eq=False)
class StepUnitaries:
    """Step operators ``U_{1,0}, U_{2,1}, ..., U_{N-1,N-2}, U_{0,N-1}``.

    ``deviation`` is ``min_phi ||P - e^{i phi} I||_F`` for the cyclic product
    ``P`` and ``phase`` is the recorded ``phi``.
    """

    steps: tuple

    def __post_init__(self):
        mats = tuple(_matrix(u) for u in self.steps)
        if not mats:
            raise HistoryError("at least one step unitary is required")
        object.__setattr__(self, "steps", mats)

    @property
    def n_clock(self) -> int:
        return len(self.steps)

    def cyclic_product(self) -> np.ndarray:
        p = np.eye(2, dtype=complex)
        for u in self.steps:
            p = u @ p
        return p

    @property
    def phase(self) -> float:
        return cmath.phase(np.trace(self.cyclic_product()))

    @property
    def deviation(self) -> float:
        p = self.cyclic_product()
        return float(np.linalg.norm(p - cmath.exp(1j * self.phase) * np.eye(2)))


def make_history(psi0, unitaries: Sequence) -> HistoryState:
    """``W (1 x H)|psi0>|0>``: states ``U_t|psi0>`` with uniform clock weights."""
    if len(unitaries) == 0:
        raise HistoryError("unitary list must be non-empty")
    v = _vector(psi0)
    mats = np.array([_matrix(u) for u in unitaries])
    return HistoryState(mats @ v)


def make_history_from_steps(
    psi0, steps: StepUnitaries, k: int = 0, tol: float = CYCLIC_TOL
) -> HistoryState:
    """Eigenstate of the cyclic step operator on branch ``k``.

    States are ``e^{-i(2 pi k + gamma) t / N} U_{t,t-1}...U_{1,0}|psi0>`` where
    ``gamma`` is the phase of the cyclic product; the eigenvalue is then
    ``e^{i(2 pi k + gamma)/N}``.
    """
    if not isinstance(steps, StepUnitaries):
        steps = StepUnitaries(tuple(steps))
    n = steps.n_clock
    if not 0 <= k < n:
        raise HistoryError(f"branch k must lie in 0..{n - 1}, got {k}")
    if steps.deviation > tol:
        raise CyclicConditionViolated(steps.deviation, tol)
    gamma = steps.phase
    out = np.empty((n, 2), dtype=complex)
    v = _vector(psi0)
    for t in range(n):
        out[t] = cmath.exp(-1j * (2 * math.pi * k + gamma) * t / n) * v
        v = steps.steps[t] @ v
    return HistoryState(out, cyclic_phase=gamma)


def step_operator(steps: StepUnitaries) -> np.ndarray:
    """``sum_t U_{t,t-1} x |t><t-1|`` on the joint space (system index major)."""
    n = steps.n_clock
    shift = np.zeros((n, n))
    op = np.zeros((2 * n, 2 * n), dtype=complex)
    for t in range(n):
        shift[:] = 0
        shift[(t + 1) % n, t] = 1
        op += np.kron(steps.steps[t], shift)
    return op


def verify_eigenstate(psi: HistoryState, steps, k: int = 0) -> float:
    if not isinstance(steps, StepUnitaries):
        steps = StepUnitaries(tuple(steps))
    n = psi.n_clock
    if steps.n_clock != n:
        raise DimensionMismatch(f"history has N={n} but {steps.n_clock} steps")
    vec = psi.joint_vector()
    eig = cmath.exp(1j * (2 * math.pi * k + psi.cyclic_phase) / n)
    return float(np.linalg.norm(step_operator(steps) @ vec - eig * vec))


def conditional_state(psi: HistoryState, t: int) -> PureQubit:
    """``sqrt(N) <t|Psi>`` read off the joint vector, canonical phase."""
    n = psi.n_clock
    if not 0 <= t < n:
        raise IndexError(f"t must lie in 0..{n - 1}, got {t}")
    joint = psi.joint_vector().reshape(2, n)
    return PureQubit.from_vector(math.sqrt(n) * joint[:, t], normalize=True)


def _reduced_matrix(amps: np.ndarray) -> np.ndarray:
    return np.einsum("ti,tj->ij", amps, amps.conj()) / amps.shape[0]


def reduced_system(psi: HistoryState, n: int | None = None) -> QubitState:
    n = psi.n_clock if n is None else n
    _check_n(psi, n)
    return QubitState(_reduced_matrix(psi.amplitudes[:n]))


def _entropy_bits(probs) -> float:
    p = np.clip(np.asarray(probs, dtype=float), 0.0, 1.0)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def entanglement_entropy(psi: HistoryState, n: int | None = None) -> float:
    """Von Neumann entropy of the reduced system state of the first n steps, in bits."""
    return _entropy_bits(reduced_system(psi, n).eigenvalues())


def _overlap_matrix(amps: np.ndarray) -> np.ndarray:
    return np.abs(amps.conj() @ amps.T) ** 2


def quadratic_entanglement(psi: HistoryState, n: int | None = None) -> float:
    """Linear entropy ``2(1 - Tr rho^2)``, cross-checked against the overlap sum."""
    n = psi.n_clock if n is None else n
    _check_n(psi, n)
    amps = psi.amplitudes[:n]
    rho = _reduced_matrix(amps)
    by_purity = 2.0 * (1.0 - float(np.real(np.trace(rho @ rho))))
    ov = _overlap_matrix(amps)
    pair_sum = 0.5 * (ov.sum() - np.trace(ov))
    by_overlaps = (2.0 / n) * (n - 1 - (2.0 / n) * pair_sum)
    if abs(by_purity - by_overlaps) > QUADRATIC_TOL:
        raise ConsistencyError(
            f"quadratic entanglement routes disagree: {by_purity!r} vs {by_overlaps!r}"
        )
    return by_purity if by_purity > NOISE_FLOOR else 0.0


@dataclass(frozen=True, eq=False)
class EntropyCurve:
    n: np.ndarray
    von_neumann: np.ndarray
    quadratic: np.ndarray

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(k), float(e)) for k, e in zip(self.n, self.von_neumann)]


def entropy_curve(psi: HistoryState) -> EntropyCurve:
    ns = np.arange(1, psi.n_clock + 1)
    vn = np.array([entanglement_entropy(psi, int(k)) for k in ns])
    quad = np.array([quadratic_entanglement(psi, int(k)) for k in ns])
    return EntropyCurve(ns, vn, quad)


def two_state_probabilities(c: float, n: int) -> tuple[float, float]:
    """Reduced-state eigenvalues for a history alternating between two states.

    ``c`` is the overlap modulus ``|<psi_0|psi_1>|``; ``n`` counts steps, with
    ``psi_0`` on even and ``psi_1`` on odd clock times.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {c}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n % 2 == 0:
        root = c
    else:
        root = math.sqrt(c * c * (1 - 1 / n**2) + 1 / n**2)
    return 0.5 * (1 + root), 0.5 * (1 - root)


def two_state_entropy(c: float, n: int) -> float:
    return _entropy_bits(two_state_probabilities(c, n))


def time_average(psi: HistoryState, axis: str) -> float:
    """Time-averaged Pauli expectation, evaluated sequentially and globally.

    The sequential route averages ``<psi_t|sigma|psi_t>`` over clock slots; the
    global route takes ``<Psi|sigma x 1|Psi>`` on the joint vector. Both must
    agree to 1e-12.
    """
    seq, glob = time_average_routes(psi, axis)
    if abs(seq - glob) > AVERAGE_TOL:
        raise ConsistencyError(f"time-average routes disagree: {seq!r} vs {glob!r}")
    return glob


def time_average_routes(psi: HistoryState, axis: str) -> tuple[float, float]:
    if axis not in PAULI:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    sigma = PAULI[axis]
    amps = psi.amplitudes
    per_slot = np.real(np.einsum("ti,ij,tj->t", amps.conj(), sigma, amps))
    sequential = float(np.mean(per_slot))
    # the uniform 1/sqrt(N) weight is applied after the contraction to keep
    # the stationary case exact
    raw = amps.T.reshape(-1)
    op = np.kron(sigma, np.eye(psi.n_clock))
    global_ = float(np.real(np.vdot(raw, op @ raw))) / psi.n_clock
    return sequential, global_


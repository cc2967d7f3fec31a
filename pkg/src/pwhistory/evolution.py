"""Controlled evolution operator W = sum_t U_t x |t><t| and its entangling power."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import HistoryError, NotARotation
from .history import NOISE_FLOOR, make_history, quadratic_entanglement
from .polarization import I2, PAULI, PureQubit

UNITARY_TOL = 1e-12
SYSTEM_DIM = 2

# sigma_0 = I followed by sigma_x, sigma_y, sigma_z
PAULI_BASIS = np.array([I2, PAULI["x"], PAULI["y"], PAULI["z"]])


@dataclass(frozen=True, eq=False)
class EvolutionOperator:
    """Ordered unitaries ``U_0 .. U_{N-1}``; raw matrices, phases untouched."""

    unitaries: np.ndarray

    def __post_init__(self):
        mats = np.array(
            [np.asarray(getattr(u, "matrix", u), dtype=complex) for u in self.unitaries]
        )
        if mats.ndim != 3 or mats.shape[1:] != (2, 2) or len(mats) == 0:
            raise HistoryError(f"expected a non-empty list of 2x2 unitaries, got {mats.shape}")
        gram = np.einsum("tji,tjk->tik", mats.conj(), mats)
        if np.max(np.abs(gram - np.eye(2))) > UNITARY_TOL:
            raise NotARotation("every entry of an evolution operator must be unitary")
        mats.setflags(write=False)
        object.__setattr__(self, "unitaries", mats)

    @property
    def n_clock(self) -> int:
        return len(self.unitaries)

    def __len__(self):
        return self.n_clock


@dataclass(frozen=True)
class SchmidtSpectrum:
    values: tuple

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)


def _as_operator(w) -> EvolutionOperator:
    return w if isinstance(w, EvolutionOperator) else EvolutionOperator(w)


def pauli_coefficients(u) -> np.ndarray:
    """``r_mu = Tr(U sigma_mu)`` for mu = 0..3, so ``U = sum_mu r_mu sigma_mu / 2``."""
    u = np.asarray(getattr(u, "matrix", u), dtype=complex)
    return np.einsum("ij,mji->m", u, PAULI_BASIS)


def coefficient_matrix(w) -> np.ndarray:
    """4 x N matrix ``C[mu, t] = r_mu(t) / (2 sqrt(N))``; unit Frobenius norm."""
    w = _as_operator(w)
    r = np.einsum("tij,mji->mt", w.unitaries, PAULI_BASIS)
    return r / (2.0 * math.sqrt(w.n_clock))


def schmidt_spectrum(w, cutoff: float = 1e-14) -> SchmidtSpectrum:
    """Operator Schmidt coefficients of W, descending.

    Taken as square roots of the eigenvalues of the 4x4 Gram matrix ``C C^dagger``;
    eigenvalues at or below ``cutoff`` are dropped.
    """
    w = _as_operator(w)
    c = coefficient_matrix(w)
    gram = c @ c.conj().T
    ev = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))[::-1]
    ev = ev[: min(4, w.n_clock)]
    ev = ev[ev > cutoff]
    lam = np.sqrt(ev)
    return SchmidtSpectrum(tuple(float(x) for x in lam))


def operator_entanglement(w) -> float:
    """``2 (1 - sum lambda^4)``."""
    lam = schmidt_spectrum(w).as_array()
    e = 2.0 * (1.0 - float(np.sum(lam**4)))
    return e if e > NOISE_FLOOR else 0.0


def entangling_power_closed_form(w) -> float:
    d = SYSTEM_DIM
    return d / (d + 1) * operator_entanglement(w)


def haar_random_pure(rng: np.random.Generator) -> PureQubit:
    """Uniform point on the Bloch sphere: ``z ~ U[-1, 1]``, azimuth ``~ U[0, 2 pi)``."""
    z = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    rho = math.sqrt(max(0.0, 1.0 - z * z))
    return PureQubit.from_bloch([rho * math.cos(phi), rho * math.sin(phi), z])


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sample ``index``, a pure function of (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def sample_values(w, indices: Iterable[int], seed: int) -> list[float]:
    """Quadratic entanglement of ``make_history(psi0_i, W)`` for each sample index."""
    w = _as_operator(w)
    out = []
    for i in indices:
        psi0 = haar_random_pure(sample_rng(seed, i))
        out.append(quadratic_entanglement(make_history(psi0, w.unitaries)))
    return out


def entangling_power_mc(w, samples: int = 1000, seed: int = 0) -> float:
    """Monte-Carlo mean quadratic entanglement over Haar-random initial states.

    Each sample draws from its own substream, and the mean uses an exactly
    rounded sum, so the estimate does not depend on how samples are split
    across workers or in which order they are reduced.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    vals = sample_values(w, range(samples), seed)
    return math.fsum(vals) / samples


def verify_entangling_relation(w, samples: int = 1000, seed: int = 0) -> float:
    """``|MC estimate - d/(d+1) E2(W)|`` with ``d = 2``."""
    return abs(entangling_power_mc(w, samples, seed) - entangling_power_closed_form(w))


def haar_random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 2x2 unitary (QR of a complex Ginibre matrix, phase-fixed)."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_evolution(n: int, rng: np.random.Generator) -> EvolutionOperator:
    return EvolutionOperator([haar_random_unitary(rng) for _ in range(n)])


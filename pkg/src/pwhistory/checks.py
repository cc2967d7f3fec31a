"""Self-verification battery run by ``pwhistory verify``.

Each check returns ``(ok, detail)``; random inputs come from fixed seeds so a
run is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import calibration as cal
from . import history as hist
from . import mueller as mu
from . import polarization as pol
from .evolution import haar_random_unitary
from .fixtures import EQUIVALENT_PAIRS, load_fixtures

SEED = 20201014


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def random_bloch(rng, n, max_norm=1.0):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (max_norm * rng.uniform(0, 1, size=(n, 1)) ** (1 / 3))


def random_pure_amplitudes(rng, n):
    z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_rotation(rng):
    return mu.bloch_rotation(haar_random_unitary(rng))


def random_depolarizer_block(rng, lo=0.5, hi=1.0):
    q = random_rotation(rng)
    return q @ np.diag(rng.uniform(lo, hi, size=3)) @ q.T


def random_diattenuation(rng, max_norm=0.5):
    return random_bloch(rng, 1, max_norm)[0]


def synthetic_mueller(rng):
    """``M_delta M_R M_D`` from random valid factors, with the factors."""
    m_delta = np.eye(4)
    m_delta[1:, 1:] = random_depolarizer_block(rng)
    m_r = mu.RetarderMatrix.from_rotation(random_rotation(rng))
    m_d = mu.diattenuator(random_diattenuation(rng))
    return mu.MuellerMatrix(m_delta @ m_r.matrix @ m_d.matrix), m_r


def random_cyclic_steps(rng, n):
    """N random step unitaries whose ordered product is the identity."""
    steps = [haar_random_unitary(rng) for _ in range(n - 1)]
    p = np.eye(2, dtype=complex)
    for u in steps:
        p = u @ p
    steps.append(p.conj().T)
    return hist.StepUnitaries(tuple(steps))


def check_bloch_round_trip():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for r in random_bloch(rng, 200):
        back = pol.density_to_bloch(pol.bloch_to_density(r)).as_array()
        worst = max(worst, float(np.max(np.abs(back - r))))
    return worst <= 1e-12, f"max error {worst:.2e}"


def check_su2_round_trip():
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    for _ in range(200):
        u = mu.Unitary2(haar_random_unitary(rng))
        v = mu.retarder_to_unitary(mu.unitary_to_rotation(u))
        worst = max(worst, mu.projective_distance(u, v))
    return worst <= 1e-10, f"max projective distance {worst:.2e}"


def check_lu_chipman():
    rng = np.random.default_rng(SEED + 2)
    worst_res = worst_ret = 0.0
    for _ in range(100):
        m, m_r = synthetic_mueller(rng)
        f = mu.lu_chipman(m)
        worst_res = max(worst_res, f.residual)
        worst_ret = max(worst_ret, float(np.max(np.abs(f.retarder.matrix - m_r.matrix))))
    ok = worst_res <= 1e-9 and worst_ret <= 1e-9
    return ok, f"max residual {worst_res:.2e}, max retarder error {worst_ret:.2e}"


def check_eigenstates():
    rng = np.random.default_rng(SEED + 3)
    worst = 0.0
    for n in range(2, 9):
        steps = random_cyclic_steps(rng, n)
        psi0 = random_pure_amplitudes(rng, 1)[0]
        for k in range(n):
            h = hist.make_history_from_steps(psi0, steps, k)
            worst = max(worst, hist.verify_eigenstate(h, steps, k))
    return worst <= 1e-12, f"max residual {worst:.2e}"


def alternating_history(c: float, n: int) -> hist.HistoryState:
    """History alternating between |H> and a state at overlap ``c`` with it."""
    psi1 = np.array([c, math.sqrt(max(0.0, 1 - c * c))], dtype=complex)
    amps = [np.array([1, 0], dtype=complex) if t % 2 == 0 else psi1 for t in range(n)]
    return hist.HistoryState(np.array(amps))


def check_two_state_formula():
    worst = 0.0
    for c in np.linspace(0, 1, 11):
        for n in range(1, 65):
            rho = hist.reduced_system(alternating_history(float(c), n)).matrix
            brute = np.sort(np.linalg.eigvalsh(rho))[::-1]
            closed = np.array(hist.two_state_probabilities(float(c), n))
            worst = max(worst, float(np.max(np.abs(brute - closed))))
    return worst <= 1e-12, f"max error {worst:.2e}"


def check_average_duality():
    rng = np.random.default_rng(SEED + 4)
    worst = 0.0
    for n in (2, 4, 8, 52):
        for _ in range(25):
            h = hist.HistoryState(random_pure_amplitudes(rng, n))
            for axis in pol.AXES:
                seq, glob = hist.time_average_routes(h, axis)
                worst = max(worst, abs(seq - glob))
    return worst <= 1e-12, f"max difference {worst:.2e}"


def check_document_round_trip():
    rng = np.random.default_rng(SEED + 5)
    table = {5 * i: synthetic_mueller(rng)[0] for i in range(52)}
    doc = cal.Document(metadata={"source": "verify"}, calibration=table, measured=load_fixtures())
    text = cal.dumps(doc)
    back = cal.loads(text)
    exact = all(
        np.array_equal(table[k].matrix, back.calibration[k]) for k in table
    ) and [m.steps for m in back.measured] == [m.steps for m in doc.measured]
    stable = cal.dumps(back) == text
    return exact and stable, "bit-exact" if exact and stable else "round trip mismatch"


CHECKS: dict[str, Callable] = {
    "bloch-density round trip": check_bloch_round_trip,
    "SO(3)/SU(2) round trip": check_su2_round_trip,
    "Lu-Chipman synthetic round trip": check_lu_chipman,
    "step-operator eigenstates": check_eigenstates,
    "two-state probabilities": check_two_state_formula,
    "time-average duality": check_average_duality,
    "document round trip": check_document_round_trip,
}


def fixture_checks(fixtures, min_norm: float = 0.9) -> list[CheckResult]:
    """Checks against the measured trajectories."""
    results = []
    by_label = {m.label: m for m in fixtures}
    histories = {}
    for m in fixtures:
        try:
            histories[m.label] = cal.trajectory_to_history(m, min_norm)
            results.append(CheckResult(f"fixture {m.label} purification", True, f"N={len(m)}"))
        except ValueError as exc:
            results.append(CheckResult(f"fixture {m.label} purification", False, str(exc)))

    if "1" in histories:
        means = by_label["1"].bloch_vectors().mean(axis=0)
        got = np.array([hist.time_average(histories["1"], a) for a in pol.AXES])
        err = float(np.max(np.abs(got - means)))
        results.append(CheckResult("trajectory 1 averages vs column means", err <= 0.02, f"max shift {err:.4f}"))

    for a, b in EQUIVALENT_PAIRS:
        if a in by_label and b in by_label:
            try:
                moved = cal.reorder_by_levels(by_label[a], by_label[b].gray_levels)
                h0 = cal.trajectory_to_history(by_label[a], min_norm)
                h1 = cal.trajectory_to_history(moved, min_norm)
                err = max(abs(hist.time_average(h0, x) - hist.time_average(h1, x)) for x in pol.AXES)
                results.append(CheckResult(f"trajectories {a}/{b} permutation averages", err <= 1e-12, f"max diff {err:.2e}"))
            except ValueError as exc:
                results.append(CheckResult(f"trajectories {a}/{b} permutation averages", False, str(exc)))

    if "4" in histories:
        e8 = hist.entanglement_entropy(histories["4"])
        results.append(CheckResult("trajectory 4 entropy", abs(e8 - 0.11) <= 0.02, f"E_8={e8:.4f}"))
    if "7" in histories:
        vn = hist.entropy_curve(histories["7"]).von_neumann
        ok = bool(np.all(np.diff(vn[4:]) > 0))
        results.append(CheckResult("trajectory 7 entropy increasing", ok, f"E_N={vn[-1]:.4f}"))
    return results


def run_all(fixtures_path=None, min_norm: float = 0.9) -> tuple[list[CheckResult], list]:
    """Run the full battery; returns (results, loaded fixtures)."""
    results = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, ok, detail))
    try:
        if fixtures_path is not None and not Path(fixtures_path).is_dir():
            fixtures = cal.load_measured(fixtures_path)
        else:
            fixtures = load_fixtures(fixtures_path)
        results.append(CheckResult("fixtures load", True, f"{len(fixtures)} trajectories"))
    except (ValueError, OSError) as exc:
        results.append(CheckResult("fixtures load", False, str(exc)))
        return results, []
    results.extend(fixture_checks(fixtures, min_norm))
    return results, fixtures


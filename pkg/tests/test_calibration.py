import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwhistory import calibration as cal
from pwhistory import mueller as mu
from pwhistory.checks import synthetic_mueller
from pwhistory.errors import (
    BelowPurityThreshold,
    DuplicateGrayLevel,
    InvalidTrajectory,
    MissingGrayLevel,
    ParseError,
    UnphysicalMatrix,
)
from pwhistory.fixtures import EQUIVALENT_PAIRS, bundled_fixtures, fixture, load_fixtures
from pwhistory.polarization import StokesVector

I4 = np.eye(4)
LEVELS_52 = list(range(0, 256, 5))


def doc_text(*level_lines):
    return "pwhistory-document 1\n[calibration]\n" + "".join(f"{l}\n" for l in level_lines)


def flat(m):
    return " ".join(str(x) for x in np.ravel(m))


def test_identity_table(tmp_path):
    path = tmp_path / "cal.txt"
    path.write_text(doc_text(f"level 0: {flat(I4)}", f"level 30: {flat(I4)}"))
    table = cal.load_calibration(path)
    assert len(table) == 2 and table.levels == [0, 30]
    assert not table.warnings


def test_zero_m00_rejected(tmp_path):
    m = I4.copy()
    m[0, 0] = 0
    path = tmp_path / "cal.txt"
    path.write_text(doc_text(f"level 5: {flat(m)}"))
    with pytest.raises(UnphysicalMatrix, match="gray level 5"):
        cal.load_calibration(path)


def test_52_synthetic_retarders(tmp_path):
    table = cal.synthetic_table(LEVELS_52, axis=(0.3, -0.5, 0.8), radians_per_level=0.011)
    path = tmp_path / "cal.txt"
    cal.write_calibration(table, path)
    back = cal.load_calibration(path, strict=False)
    assert back.levels == LEVELS_52
    for g in LEVELS_52:
        m = back[g]
        f = mu.lu_chipman(m)
        np.testing.assert_allclose(f.retarder.matrix, m.matrix, atol=1e-12)
        assert f.residual <= 1e-12


def test_duplicate_level():
    with pytest.raises(DuplicateGrayLevel):
        cal.loads(doc_text(f"level 0: {flat(I4)}", f"level 0: {flat(I4)}"))


@pytest.mark.parametrize(
    "text",
    [
        "",
        "not-a-document 1\n",
        "pwhistory-document 2\n",
        "pwhistory-document 1\n[bogus]\n",
        "pwhistory-document 1\nlevel 0: 1\n",
        "pwhistory-document 1\n[calibration]\nlevel 0: 1 2 3\n",
        "pwhistory-document 1\n[calibration]\nlevel x: " + flat(I4) + "\n",
        "pwhistory-document 1\n[calibration]\nlevel 0: " + flat(I4)[:-1] + "q\n",
        "pwhistory-document 1\n[trajectory]\nlabel: a\n",
        "pwhistory-document 1\n[measured]\nlabel: a\ninitial: 1 0 0 1\n",
        "pwhistory-document 1\n[measured]\ninitial: 1 0 0 1\nstep: 0 0.1 0.2\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        cal.loads(text)


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as info:
        cal.loads("pwhistory-document 1\n# comment\n[calibration]\nlevel 0: 1 2\n")
    assert info.value.line == 4


def test_lenient_loading_records_warnings():
    amp = np.diag([1.0, 1.05, 1.0, 1.0])
    doc = cal.loads(doc_text(f"level 0: {flat(amp)}", f"level 200: {flat(I4)}"))
    with pytest.raises(UnphysicalMatrix):
        cal.table_from_document(doc, strict=True)
    table = cal.table_from_document(doc, strict=False)
    assert any("gray level 0" in w for w in table.warnings)
    assert any("gray level 200" in w and "flicker" in w for w in table.warnings)


def test_level_range():
    with pytest.raises(ValueError):
        cal.CalibrationTable({300: mu.MuellerMatrix.identity()})


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_document_round_trip_bit_exact(seed):
    rng = np.random.default_rng(seed)
    table = {int(g): synthetic_mueller(rng)[0] for g in rng.choice(256, size=8, replace=False)}
    spec = cal.TrajectorySpec(StokesVector(1.0, *rng.uniform(-0.5, 0.5, 3)), [0, 5, 10], "t")
    doc = cal.Document({"source": "rng", "wavelength": "633 nm"}, table, [spec], bundled_fixtures())
    text = cal.dumps(doc)
    back = cal.loads(text)
    for g, m in table.items():
        assert np.array_equal(back.calibration[g], m.matrix)
    assert back.trajectories == [spec]
    assert back.measured == doc.measured
    assert back.metadata == doc.metadata
    assert cal.dumps(back) == text


def test_write_load_calibration_bit_exact(tmp_path, rng):
    table = cal.CalibrationTable({g: synthetic_mueller(rng)[0] for g in (0, 5, 10)}, {"source": "x"})
    path = tmp_path / "cal.txt"
    cal.write_calibration(table, path)
    back = cal.load_calibration(path)
    for g in table.levels:
        assert np.array_equal(back[g].matrix, table[g].matrix)
    assert path.read_bytes().count(b"\r") == 0


def spec(levels):
    return cal.TrajectorySpec(StokesVector(1, 1, 0, 0), levels, "s")


def test_resolve_identity_table():
    table = cal.CalibrationTable({0: mu.MuellerMatrix.identity(), 30: mu.MuellerMatrix.identity()})
    w = cal.resolve_unitaries(spec([0, 30, 0]), table)
    np.testing.assert_allclose(w.unitaries, [np.eye(2)] * 3, atol=1e-15)


def test_resolve_repeats_and_determinism(rng):
    table = cal.CalibrationTable({g: synthetic_mueller(rng)[0] for g in (0, 30)})
    w = cal.resolve_unitaries(spec([0, 30, 0, 30]), table)
    assert np.array_equal(w.unitaries[0], w.unitaries[2])
    assert np.array_equal(w.unitaries[1], w.unitaries[3])
    again = cal.resolve_unitaries(spec([0, 30, 0, 30]), table)
    assert np.array_equal(w.unitaries, again.unitaries)


def test_resolve_trajectory_7_monotone_angles():
    levels = fixture("7").gray_levels
    table = cal.synthetic_table(levels, axis=(0, 1, 0), radians_per_level=0.05,
                                diattenuation=(0.1, 0.0, 0.05), depolarization=0.95)
    w = cal.resolve_unitaries(spec(levels), table)
    # canonical form has real non-negative trace = 2 cos(angle / 2)
    angles = [2 * math.acos(min(1.0, np.trace(u).real / 2)) for u in w.unitaries]
    np.testing.assert_allclose(angles, [0.05 * g for g in levels], atol=1e-9)
    assert np.all(np.diff(angles) > 0)


def test_resolve_missing_level():
    table = cal.CalibrationTable({0: mu.MuellerMatrix.identity()})
    with pytest.raises(MissingGrayLevel, match="missing gray level 7"):
        cal.resolve_unitaries(spec([0, 7]), table)


def test_pure_retarders_reproduced(rng):
    from pwhistory.checks import random_rotation

    mats = {g: mu.RetarderMatrix.from_rotation(random_rotation(rng)) for g in LEVELS_52}
    table = cal.CalibrationTable({g: r.as_mueller() for g, r in mats.items()})
    w = cal.table_unitaries(table)
    for u, g in zip(w.unitaries, LEVELS_52):
        np.testing.assert_allclose(mu.unitary_to_rotation(u).matrix, mats[g].matrix, atol=1e-10)


def test_trajectory_to_history_examples():
    h1 = cal.trajectory_to_history(fixture("1"))
    assert h1.n_clock == 2
    h4 = cal.trajectory_to_history(fixture("4"))
    assert h4.n_clock == 8
    a = h4.amplitudes
    for t in range(2, 8):
        assert abs(np.vdot(a[t], a[t % 2])) ** 2 > 0.99
    assert abs(np.vdot(a[0], a[1])) == pytest.approx(0.97, abs=0.015)


def test_trajectory_below_threshold():
    m = cal.MeasuredTrajectory("weak", StokesVector(1, 0, 1, 0), [(0, 1, 0, 0), (5, 0.2, 0, 0)])
    with pytest.raises(BelowPurityThreshold) as info:
        cal.trajectory_to_history(m)
    assert info.value.step == 2


def test_measured_norm_bound():
    with pytest.raises(InvalidTrajectory):
        cal.MeasuredTrajectory("bad", StokesVector(1, 0, 1, 0), [(0, 1.02, 0, 0)])


def test_bundled_fixtures():
    fx = bundled_fixtures()
    assert len(fx) == 7
    assert fixture("1").steps[1][1:] == (-0.3183, -0.9365, 0.0385)
    assert fixture("7").steps[7][1:] == (-0.0965, -0.9867, 0.0009)
    assert fixture("7").gray_levels == (0, 10, 15, 20, 25, 30, 35, 40)
    assert all(m.initial == StokesVector(1.0, 0.040, 0.951, -0.026) for m in fx)
    with pytest.raises(KeyError):
        fixture("8")


def test_load_fixtures_directory_override(tmp_path, monkeypatch):
    cal.write_document(cal.Document(measured=[fixture("4")]), tmp_path / "a.txt")
    assert [m.label for m in load_fixtures(tmp_path)] == ["4"]
    monkeypatch.setenv("PWHISTORY_FIXTURE_DIR", str(tmp_path))
    assert [m.label for m in load_fixtures()] == ["4"]


def test_reorder_by_levels():
    for a, b in EQUIVALENT_PAIRS:
        moved = cal.reorder_by_levels(fixture(a), fixture(b).gray_levels)
        assert moved.gray_levels == fixture(b).gray_levels
        assert sorted(moved.steps) == sorted(fixture(a).steps)
    with pytest.raises(InvalidTrajectory):
        cal.reorder_by_levels(fixture("1"), [0, 0])

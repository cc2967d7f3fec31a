import csv
import json

import numpy as np
import pytest

from pwhistory import calibration as cal
from pwhistory import history as hist
from pwhistory import mueller as mu
from pwhistory import polarization as pol
from pwhistory.cli import main
from pwhistory.fixtures import fixture
from pwhistory.polarization import StokesVector

I4 = np.eye(4)
H_STOKES = StokesVector(1, 1, 0, 0)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def identity_cal(write_doc):
    return write_doc(cal.Document(calibration={0: I4, 30: I4}), "identity.txt")


@pytest.fixture
def pauli_cal(write_doc):
    mats = {i: mu.jones_to_mueller(s).matrix for i, s in enumerate(
        [np.eye(2), pol.SIGMA_X, pol.SIGMA_Y, pol.SIGMA_Z])}
    return write_doc(cal.Document(calibration=mats), "pauli.txt")


def spec_doc(write_doc, levels, initial=H_STOKES, name="spec.txt"):
    return write_doc(cal.Document(trajectories=[cal.TrajectorySpec(initial, levels, "s")]), name)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_decompose_identity(capsys, identity_cal):
    code, out, _ = run(capsys, "decompose", identity_cal, 0)
    assert code == 0
    assert "residual: 0\n" in out
    assert "retarder:\n  1 0 0 0\n  0 1 0 0" in out


def test_decompose_synthetic_retarder(capsys, write_doc):
    table = cal.synthetic_table([0, 30], axis=(0, 0, 1), radians_per_level=0.04)
    path = write_doc(cal.Document(calibration=table.matrices))
    code, out, _ = run(capsys, "decompose", path, 30)
    assert code == 0
    expected = mu.retarder_about((0, 0, 1), 1.2).matrix
    block = out.split("retarder:\n")[1].split("diattenuator:")[0]
    got = np.array([[float(x) for x in line.split()] for line in block.strip().splitlines()])
    np.testing.assert_allclose(got, expected, atol=1e-12)
    assert "unitary:" in out


def test_decompose_missing_level(capsys, identity_cal):
    code, _, err = run(capsys, "decompose", identity_cal, 7)
    assert code == 2
    assert "missing gray level 7" in err


def test_simulate_stationary(capsys, tmp_path, identity_cal, write_doc):
    spec = spec_doc(write_doc, [0, 0, 30, 30])
    code, _, _ = run(capsys, "simulate", spec, identity_cal, "--out", tmp_path / "run")
    assert code == 0
    rows = read_csv(tmp_path / "run.entropy.csv")
    assert rows[0] == ["n", "E_n", "E2_n"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4"]
    assert all(float(r[1]) == 0 and float(r[2]) == 0 for r in rows[1:])


def test_simulate_orthogonal_pair(capsys, tmp_path, pauli_cal, write_doc):
    spec = spec_doc(write_doc, [0, 1])
    code, _, _ = run(capsys, "simulate", spec, pauli_cal, "--initial", "H", "--out", tmp_path / "o")
    assert code == 0
    bloch = read_csv(tmp_path / "o.bloch.csv")
    assert bloch[0] == ["t", "x", "y", "z"]
    np.testing.assert_allclose([[float(x) for x in r[1:]] for r in bloch[1:]], [[0, 0, 1], [0, 0, -1]], atol=1e-15)
    ent = read_csv(tmp_path / "o.entropy.csv")
    assert float(ent[2][1]) == pytest.approx(1, abs=1e-12)
    report = json.loads((tmp_path / "o.report.json").read_text())
    assert report["results"]["n_clock"] == 2
    assert set(report) >= {"command", "inputs", "results", "warnings", "wall_time_s"}
    raw = (tmp_path / "o.entropy.csv").read_bytes()
    assert b"\r" not in raw and b"," in raw


def test_simulate_trajectory_7_shape(capsys, tmp_path, write_doc):
    levels = fixture("7").gray_levels
    table = cal.synthetic_table(levels, axis=(0, 1, 0), radians_per_level=0.02)
    calp = write_doc(cal.Document(calibration=table.matrices), "c7.txt")
    spec = spec_doc(write_doc, levels, initial=fixture("7").initial)
    code, _, _ = run(capsys, "simulate", spec, calp, "--out", tmp_path / "t7")
    assert code == 0
    got = np.array([float(r[1]) for r in read_csv(tmp_path / "t7.entropy.csv")[1:]])
    psi0 = pol.purify(pol.stokes_to_bloch(fixture("7").initial))
    h = hist.make_history(psi0, cal.resolve_unitaries(cal.load_trajectory_specs(spec)[0], table).unitaries)
    np.testing.assert_allclose(got, hist.entropy_curve(h).von_neumann, atol=1e-15)
    assert np.all(np.diff(got[1:]) > 0)


def test_simulate_deterministic_results(capsys, tmp_path, pauli_cal, write_doc):
    spec = spec_doc(write_doc, [0, 1, 2, 3])
    for name in ("a", "b"):
        run(capsys, "simulate", spec, pauli_cal, "--out", tmp_path / name)
    ra = json.loads((tmp_path / "a.report.json").read_text())
    rb = json.loads((tmp_path / "b.report.json").read_text())
    assert ra["results_digest"] == rb["results_digest"]
    assert (tmp_path / "a.entropy.csv").read_bytes() == (tmp_path / "b.entropy.csv").read_bytes()


def parse_averages(out):
    vals = {}
    for line in out.splitlines():
        if "sequential=" in line:
            axis = line.split(">")[0].strip()[-1]
            parts = dict(p.split("=") for p in line.split(":", 1)[1].split())
            vals[axis] = {k: float(v) for k, v in parts.items()}
    return vals


def test_averages_stationary_spec(capsys, identity_cal, write_doc):
    spec = spec_doc(write_doc, [0, 0, 0])
    code, out, _ = run(capsys, "averages", "--spec", spec, "--calibration", identity_cal, "--axes", "z")
    assert code == 0
    v = parse_averages(out)["z"]
    assert v == {"sequential": 1.0, "global": 1.0, "diff": 0.0}


def test_averages_fixture_1(capsys):
    code, out, _ = run(capsys, "averages", "--fixture", "1", "--axes", "x")
    assert code == 0
    v = parse_averages(out)["x"]
    assert v["sequential"] == pytest.approx(-0.52555, abs=0.02)
    assert v["global"] == pytest.approx(-0.52555, abs=0.02)


def test_averages_permutation_check(capsys):
    code, out, _ = run(capsys, "averages", "--fixture", "2", "--fixture", "3", "--permutation-check")
    assert code == 0
    diffs = [float(l.split("diff=")[1]) for l in out.split("permutation")[1].splitlines() if "diff=" in l]
    assert len(diffs) == 3 and max(diffs) <= 1e-12


def test_averages_bad_input(capsys):
    assert run(capsys, "averages", "--axes", "q")[0] == 2
    assert run(capsys, "averages", "--fixture", "99")[0] == 2
    assert run(capsys, "averages", "--fixture", "1", "--permutation-check")[0] == 2


def ep_values(out):
    return dict(line.split(": ") for line in out.strip().splitlines())


def test_entangling_power_stationary(capsys, identity_cal):
    code, out, _ = run(capsys, "entangling-power", identity_cal, "--samples", 100)
    assert code == 0
    v = ep_values(out)
    assert float(v["entangling_power_mc"]) == 0
    assert float(v["closed_form"]) == 0
    assert float(v["deviation"]) == 0


def test_entangling_power_paulis(capsys, pauli_cal):
    code, out, _ = run(capsys, "entangling-power", pauli_cal, "--samples", 1000, "--seed", 3)
    assert code == 0
    v = ep_values(out)
    assert float(v["closed_form"]) == pytest.approx(1, abs=1e-12)
    assert float(v["deviation"]) < 0.01


def test_entangling_power_same_seed_identical(capsys, pauli_cal):
    a = run(capsys, "entangling-power", pauli_cal, "--samples", 200, "--seed", 9)
    b = run(capsys, "entangling-power", pauli_cal, "--samples", 200, "--seed", 9)
    assert a == b
    assert run(capsys, "entangling-power", pauli_cal, "--samples", 0)[0] == 2


def test_verify_fresh(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert "FAIL" not in out


def test_verify_corrupted_fixture(capsys, tmp_path):
    good = cal.dumps(cal.Document(measured=[fixture("1")]))
    bad = good.replace("-0.31830000000000003", "-0.5").replace("-0.3183 ", "-0.5 ")
    assert bad != good
    (tmp_path / "bad.txt").write_text(bad)
    code, out, _ = run(capsys, "verify", "--fixtures", tmp_path / "bad.txt")
    assert code == 1
    assert "FAIL fixtures load" in out and "step 2" in out


def test_verify_verbose_lists_trajectories(capsys):
    code, out, _ = run(capsys, "verify", "-v")
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith("trajectory ") and "E_N=" in l]
    assert len(lines) == 7
    e4 = float(lines[3].split("E_N=")[1])
    assert e4 == hist.entanglement_entropy(cal.trajectory_to_history(fixture("4")))

"""Measured SLM trajectories bundled as fixtures.

Pauli means ``(<sx>, <sy>, <sz>)`` per step and the gray level driving each
step, exactly as printed (four decimals). All trajectories start from the
input Stokes vector ``(1.000, 0.040, 0.951, -0.026)``.
"""

from __future__ import annotations

import os
from pathlib import Path

from .calibration import MeasuredTrajectory, load_measured
from .polarization import StokesVector

INITIAL_STOKES = StokesVector(1.000, 0.040, 0.951, -0.026)

FIXTURE_DIR_ENV = "PWHISTORY_FIXTURE_DIR"

# label -> (gray levels, <sx> row, <sy> row, <sz> row)
_TABLE = {
    "1": (
        (0, 30),
        (-0.7328, -0.3183),
        (-0.6621, -0.9365),
        (0.0541, 0.0385),
    ),
    "2": (
        (0, 30, 0, 30),
        (-0.7358, -0.3465, -0.7122, -0.3147),
        (-0.6505, -0.9306, -0.6802, -0.9299),
        (0.0447, 0.0273, 0.0452, 0.0271),
    ),
    "3": (
        (0, 30, 30, 0),
        (-0.7093, -0.2996, -0.3614, -0.7277),
        (-0.6787, -0.9404, -0.9214, -0.6551),
        (0.0453, 0.0253, 0.0365, 0.0442),
    ),
    "4": (
        (0, 30, 0, 30, 0, 30, 0, 30),
        (-0.7110, -0.3183, -0.6849, -0.2957, -0.7112, -0.3432, -0.7315, -0.3496),
        (-0.6614, -0.9382, -0.7017, -0.9303, -0.6475, -0.9263, -0.6473, -0.9180),
        (0.0382, 0.0288, 0.0433, 0.0183, 0.0334, 0.0322, 0.0376, 0.0337),
    ),
    "5": (
        (25, 0, 15, 35),
        (-0.4558, -0.7218, -0.6019, -0.2006),
        (-0.8689, -0.6673, -0.7789, -0.9632),
        (0.0394, 0.0438, 0.0475, 0.0134),
    ),
    "6": (
        (0, 15, 25, 35),
        (-0.7312, -0.6167, -0.4331, -0.2030),
        (-0.6491, -0.7692, -0.8889, -0.9627),
        (0.0420, 0.0433, 0.0413, 0.0120),
    ),
    "7": (
        (0, 10, 15, 20, 25, 30, 35, 40),
        (-0.7538, -0.6908, -0.5848, -0.5458, -0.4772, -0.3308, -0.2489, -0.0965),
        (-0.6383, -0.6910, -0.8004, -0.8194, -0.8705, -0.9408, -0.9656, -0.9867),
        (0.0595, 0.0473, 0.0548, 0.0495, 0.0447, 0.0387, 0.0315, 0.0009),
    ),
}

# trajectories that visit the same gray levels in a different order
EQUIVALENT_PAIRS = (("2", "3"), ("5", "6"))


def bundled_fixtures() -> list[MeasuredTrajectory]:
    out = []
    for label, (levels, xs, ys, zs) in _TABLE.items():
        steps = list(zip(levels, xs, ys, zs))
        out.append(MeasuredTrajectory(label, INITIAL_STOKES, steps))
    return out


def fixture(label: str) -> MeasuredTrajectory:
    for m in bundled_fixtures():
        if m.label == str(label):
            return m
    raise KeyError(f"no bundled trajectory labelled {label!r}")


def load_fixtures(directory=None) -> list[MeasuredTrajectory]:
    """Fixtures from ``directory`` (or ``$PWHISTORY_FIXTURE_DIR``), else the bundled set.

    Every ``*.txt`` document in the directory contributes its ``[measured]``
    sections, in file-name order.
    """
    directory = directory or os.environ.get(FIXTURE_DIR_ENV)
    if not directory:
        return bundled_fixtures()
    out = []
    for path in sorted(Path(directory).glob("*.txt")):
        out.extend(load_measured(path))
    return out

"""Parallel-in-time history states of a polarization qubit and a discrete clock."""

from .calibration import (
    CalibrationTable,
    MeasuredTrajectory,
    TrajectorySpec,
    load_calibration,
    resolve_unitaries,
    trajectory_to_history,
)
from .evolution import (
    EvolutionOperator,
    entangling_power_mc,
    operator_entanglement,
    schmidt_spectrum,
    verify_entangling_relation,
)
from .fixtures import bundled_fixtures
from .history import (
    HistoryState,
    StepUnitaries,
    entanglement_entropy,
    entropy_curve,
    make_history,
    make_history_from_steps,
    quadratic_entanglement,
    time_average,
    two_state_probabilities,
)
from .mueller import MuellerMatrix, RetarderMatrix, Unitary2, lu_chipman, retarder_to_unitary
from .polarization import BlochVector, PureQubit, QubitState, StokesVector, purify, stokes_to_bloch

__version__ = "0.1.0"

__all__ = [
    "BlochVector",
    "CalibrationTable",
    "EvolutionOperator",
    "HistoryState",
    "MeasuredTrajectory",
    "MuellerMatrix",
    "PureQubit",
    "QubitState",
    "RetarderMatrix",
    "StepUnitaries",
    "StokesVector",
    "TrajectorySpec",
    "Unitary2",
    "bundled_fixtures",
    "entanglement_entropy",
    "entangling_power_mc",
    "entropy_curve",
    "load_calibration",
    "lu_chipman",
    "make_history",
    "make_history_from_steps",
    "operator_entanglement",
    "purify",
    "quadratic_entanglement",
    "resolve_unitaries",
    "retarder_to_unitary",
    "schmidt_spectrum",
    "stokes_to_bloch",
    "time_average",
    "trajectory_to_history",
    "two_state_probabilities",
    "verify_entangling_relation",
]

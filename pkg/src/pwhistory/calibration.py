"""Calibration tables, trajectory specs, measured trajectories and their text document.

Document layout (``#`` starts a comment, blank lines are ignored)::

    pwhistory-document 1
    [metadata]
    source: synthetic retarder table
    wavelength: 660 nm
    [calibration]
    level 0: m00 m01 m02 m03 m10 ... m33
    [trajectory]
    label: traj-7
    initial: s0 s1 s2 s3
    levels: 0 10 15 20
    [measured]
    label: 1
    initial: s0 s1 s2 s3
    step: gray <sx> <sy> <sz>

Floats are written with 17 significant digits so documents round-trip
bit-exactly. Any number of ``[trajectory]`` and ``[measured]`` sections may
appear; at most one ``[calibration]``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import (
    BelowPurityThreshold,
    DuplicateGrayLevel,
    HistoryError,
    InvalidTrajectory,
    MissingGrayLevel,
    ParseError,
    UnphysicalMatrix,
)
from .evolution import EvolutionOperator
from .history import HistoryState
from .mueller import MuellerMatrix, lu_chipman, physicality_violations, retarder_to_unitary
from .polarization import BlochVector, StokesVector, purify

FORMAT_TAG = "pwhistory-document"
FORMAT_VERSION = 1
USABLE_GRAY_MAX = 40
MEASURED_SLACK = 1e-6


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class CalibrationTable:
    matrices: dict
    metadata: dict = field(default_factory=dict)
    warnings: tuple = ()

    def __post_init__(self):
        ordered = dict(sorted((int(k), v) for k, v in self.matrices.items()))
        for level in ordered:
            if not 0 <= level <= 255:
                raise HistoryError(f"gray level {level} outside 0..255")
        object.__setattr__(self, "matrices", ordered)

    @property
    def levels(self) -> list[int]:
        return list(self.matrices)

    def __getitem__(self, level: int) -> MuellerMatrix:
        try:
            return self.matrices[level]
        except KeyError:
            raise MissingGrayLevel(level) from None

    def __contains__(self, level) -> bool:
        return level in self.matrices

    def __len__(self):
        return len(self.matrices)


@dataclass(frozen=True)
class TrajectorySpec:
    initial: StokesVector
    gray_levels: tuple
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gray_levels", tuple(int(g) for g in self.gray_levels))
        if not self.gray_levels:
            raise InvalidTrajectory(f"trajectory {self.label!r} has no gray levels")


@dataclass(frozen=True)
class MeasuredTrajectory:
    """Measured Pauli means per step: ``steps[i] = (gray, <sx>, <sy>, <sz>)``."""

    label: str
    initial: StokesVector
    steps: tuple

    def __post_init__(self):
        steps = tuple(
            (int(g), float(sx), float(sy), float(sz)) for g, sx, sy, sz in self.steps
        )
        if not steps:
            raise InvalidTrajectory(f"measured trajectory {self.label!r} has no steps")
        for i, (_, sx, sy, sz) in enumerate(steps):
            norm = math.sqrt(sx * sx + sy * sy + sz * sz)
            if norm > 1 + MEASURED_SLACK:
                raise InvalidTrajectory(
                    f"trajectory {self.label!r} step {i + 1}: Pauli-mean norm "
                    f"{norm:.4f} exceeds 1"
                )
        object.__setattr__(self, "steps", steps)

    @property
    def gray_levels(self) -> tuple:
        return tuple(s[0] for s in self.steps)

    def bloch_vectors(self) -> np.ndarray:
        return np.array([s[1:] for s in self.steps], dtype=float)

    def __len__(self):
        return len(self.steps)


@dataclass
class Document:
    metadata: dict = field(default_factory=dict)
    calibration: Optional[dict] = None
    trajectories: list = field(default_factory=list)
    measured: list = field(default_factory=list)


# -- serialization ---------------------------------------------------------------


def _stokes_line(s: StokesVector) -> str:
    return " ".join(fmt(v) for v in s.as_array())


def dumps(doc: Document) -> str:
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}"]
    if doc.metadata:
        lines.append("[metadata]")
        lines += [f"{k}: {v}" for k, v in doc.metadata.items()]
    if doc.calibration is not None:
        lines.append("[calibration]")
        for level, m in sorted(doc.calibration.items()):
            mat = getattr(m, "matrix", m)
            nums = " ".join(fmt(x) for x in np.asarray(mat, dtype=float).ravel())
            lines.append(f"level {level}: {nums}")
    for spec in doc.trajectories:
        lines.append("[trajectory]")
        lines.append(f"label: {spec.label}")
        lines.append(f"initial: {_stokes_line(spec.initial)}")
        lines.append("levels: " + " ".join(str(g) for g in spec.gray_levels))
    for m in doc.measured:
        lines.append("[measured]")
        lines.append(f"label: {m.label}")
        lines.append(f"initial: {_stokes_line(m.initial)}")
        for g, sx, sy, sz in m.steps:
            lines.append(f"step: {g} {fmt(sx)} {fmt(sy)} {fmt(sz)}")
    return "\n".join(lines) + "\n"


def _floats(text: str, count: int, lineno: int) -> list[float]:
    parts = text.split()
    if len(parts) != count:
        raise ParseError(f"expected {count} numbers, got {len(parts)}", lineno)
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None


def _int(text: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"expected an integer, got {text!r}", lineno) from None


def _finish(section, fields, doc, lineno):
    if section == "trajectory":
        if "initial" not in fields or "levels" not in fields:
            raise ParseError("trajectory section needs 'initial' and 'levels'", lineno)
        try:
            doc.trajectories.append(
                TrajectorySpec(fields["initial"], fields["levels"], fields.get("label", ""))
            )
        except HistoryError as exc:
            raise ParseError(str(exc), lineno) from None
    elif section == "measured":
        if "initial" not in fields or not fields.get("steps"):
            raise ParseError("measured section needs 'initial' and at least one 'step'", lineno)
        doc.measured.append(
            MeasuredTrajectory(fields.get("label", ""), fields["initial"], fields["steps"])
        )


def loads(text: str) -> Document:
    """Parse a document.

    Raises :class:`ParseError` on malformed input and
    :class:`DuplicateGrayLevel` on repeated calibration levels. Matrices are
    returned as raw arrays; validation happens in :func:`table_from_document`.
    """
    doc = Document()
    section = None
    fields: dict = {}
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not seen_header:
            parts = line.split()
            if len(parts) != 2 or parts[0] != FORMAT_TAG:
                raise ParseError(f"missing '{FORMAT_TAG} <version>' header", lineno)
            if _int(parts[1], lineno) != FORMAT_VERSION:
                raise ParseError(f"unsupported document version {parts[1]}", lineno)
            seen_header = True
            continue
        if line.startswith("[") and line.endswith("]"):
            _finish(section, fields, doc, lineno)
            section = line[1:-1].strip()
            fields = {"steps": []}
            if section == "calibration":
                if doc.calibration is not None:
                    raise ParseError("more than one calibration section", lineno)
                doc.calibration = {}
            elif section not in ("metadata", "trajectory", "measured"):
                raise ParseError(f"unknown section [{section}]", lineno)
            continue
        if ":" not in line:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        key, value = (p.strip() for p in line.split(":", 1))
        if section is None:
            raise ParseError("content before any section", lineno)
        if section == "metadata":
            doc.metadata[key] = value
        elif section == "calibration":
            kparts = key.split()
            if len(kparts) != 2 or kparts[0] != "level":
                raise ParseError(f"expected 'level <n>', got {key!r}", lineno)
            level = _int(kparts[1], lineno)
            if level in doc.calibration:
                raise DuplicateGrayLevel(f"line {lineno}: gray level {level} listed twice")
            doc.calibration[level] = np.array(_floats(value, 16, lineno)).reshape(4, 4)
        elif key == "label":
            fields["label"] = value
        elif key == "initial":
            nums = _floats(value, 4, lineno)
            try:
                fields["initial"] = StokesVector(*nums)
            except HistoryError as exc:
                raise ParseError(str(exc), lineno) from None
        elif key == "levels" and section == "trajectory":
            fields["levels"] = [_int(v, lineno) for v in value.split()]
        elif key == "step" and section == "measured":
            parts = value.split()
            if len(parts) != 4:
                raise ParseError("step needs a gray level and three Pauli means", lineno)
            fields["steps"].append((_int(parts[0], lineno), *_floats(" ".join(parts[1:]), 3, lineno)))
        else:
            raise ParseError(f"unexpected key {key!r} in [{section}]", lineno)
    if not seen_header:
        raise ParseError("empty document")
    _finish(section, fields, doc, None)
    return doc


def load_document(path) -> Document:
    return loads(Path(path).read_text(encoding="utf-8"))


def write_document(doc: Document, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8", newline="\n")


def table_from_document(doc: Document, strict: bool = True) -> CalibrationTable:
    if doc.calibration is None:
        raise ParseError("document has no [calibration] section")
    matrices = {}
    notes = []
    for level, mat in doc.calibration.items():
        try:
            m = MuellerMatrix(mat)
        except UnphysicalMatrix as exc:
            raise UnphysicalMatrix(f"gray level {level}: {exc}") from None
        problems = physicality_violations(m)
        if problems:
            if strict:
                raise UnphysicalMatrix(f"gray level {level}: {problems[0]}")
            notes += [f"gray level {level}: {p}" for p in problems]
        if level > USABLE_GRAY_MAX:
            notes.append(
                f"gray level {level} above {USABLE_GRAY_MAX}: SLM flicker depolarization "
                "is not modeled"
            )
        matrices[level] = m
    return CalibrationTable(matrices, dict(doc.metadata), tuple(notes))


def load_calibration(path, strict: bool = True) -> CalibrationTable:
    return table_from_document(load_document(path), strict=strict)


def write_calibration(table: CalibrationTable, path) -> None:
    write_document(Document(metadata=dict(table.metadata), calibration=dict(table.matrices)), path)


def load_trajectory_specs(path) -> list[TrajectorySpec]:
    return load_document(path).trajectories


def load_measured(path) -> list[MeasuredTrajectory]:
    return load_document(path).measured


# -- conversions -----------------------------------------------------------------


def resolve_unitaries(spec: TrajectorySpec, table: CalibrationTable) -> EvolutionOperator:
    """Lu-Chipman retarder of each listed gray level, lifted to SU(2), in spec order."""
    missing = [g for g in spec.gray_levels if g not in table]
    if missing:
        raise MissingGrayLevel(missing[0])
    cache = {}
    for g in spec.gray_levels:
        if g not in cache:
            cache[g] = retarder_to_unitary(lu_chipman(table[g]).retarder).matrix
    return EvolutionOperator([cache[g] for g in spec.gray_levels])


def table_unitaries(table: CalibrationTable) -> EvolutionOperator:
    """Every level of the table, ascending, as an evolution operator."""
    spec = TrajectorySpec(StokesVector(1, 0, 0, 0), table.levels, "all-levels")
    return resolve_unitaries(spec, table)


def trajectory_to_history(m: MeasuredTrajectory, min_norm: float = 0.9) -> HistoryState:
    states = []
    for i, r in enumerate(m.bloch_vectors()):
        try:
            states.append(purify(BlochVector.from_array(r), min_norm))
        except BelowPurityThreshold as exc:
            raise BelowPurityThreshold(exc.norm, min_norm, step=i + 1) from None
    return HistoryState.from_states(states)


def reorder_by_levels(reference: MeasuredTrajectory, levels: Iterable[int], label: str = "") -> MeasuredTrajectory:
    """Permute ``reference``'s steps so their gray levels follow ``levels``.

    Steps sharing a gray level are consumed in their original order. The gray
    level multisets must match.
    """
    levels = [int(g) for g in levels]
    if Counter(levels) != Counter(reference.gray_levels):
        raise InvalidTrajectory(
            f"gray levels {levels} are not a permutation of {list(reference.gray_levels)}"
        )
    pools: dict = {}
    for step in reference.steps:
        pools.setdefault(step[0], []).append(step)
    steps = [pools[g].pop(0) for g in levels]
    return MeasuredTrajectory(label or f"{reference.label}-reordered", reference.initial, steps)


def synthetic_table(
    levels: Iterable[int],
    axis=(0.0, 1.0, 0.0),
    radians_per_level: float = 0.05,
    diattenuation=None,
    depolarization: float = 1.0,
) -> CalibrationTable:
    """Table whose retardance grows linearly with gray level about a Stokes axis.

    Optional diattenuation vector and isotropic depolarization factor are
    composed on either side of the retarder, so Lu-Chipman has to strip them.
    """
    from .mueller import diattenuator, retarder_about

    mats = {}
    m_d = np.eye(4) if diattenuation is None else diattenuator(diattenuation).matrix
    m_delta = np.diag([1.0, depolarization, depolarization, depolarization])
    for g in levels:
        m_r = retarder_about(axis, radians_per_level * g).matrix
        mats[int(g)] = MuellerMatrix(m_delta @ m_r @ m_d)
    return CalibrationTable(mats, {"source": "synthetic"})

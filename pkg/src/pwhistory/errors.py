"""Exception hierarchy.

Every error raised deliberately by the library derives from
:class:`HistoryError`, which itself derives from :class:`ValueError` so that
callers treating bad numeric input generically keep working.
"""


class HistoryError(ValueError):
    pass


class InvalidStokes(HistoryError):
    pass


class InvalidState(HistoryError):
    pass


class BelowPurityThreshold(HistoryError):
    def __init__(self, norm, min_norm, step=None):
        self.norm = norm
        self.min_norm = min_norm
        self.step = step
        where = "" if step is None else f"step {step}: "
        super().__init__(
            f"{where}Bloch norm {norm:.6f} below purity threshold {min_norm}"
        )


class UnphysicalOutput(HistoryError):
    pass


class UnphysicalMatrix(HistoryError):
    pass


class NotARotation(HistoryError):
    pass


class SingularDiattenuator(HistoryError):
    pass


class DegenerateDepolarizer(HistoryError):
    pass


class CyclicConditionViolated(HistoryError):
    def __init__(self, deviation, tol):
        self.deviation = deviation
        self.tol = tol
        super().__init__(
            f"cyclic product deviates from identity (up to phase) by "
            f"{deviation:.3e} > {tol:.1e}"
        )


class DimensionMismatch(HistoryError):
    pass


class ConsistencyError(RuntimeError):
    """Two independent evaluation routes disagreed beyond tolerance."""


class ParseError(HistoryError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = "" if line is None else f"line {line}: "
        super().__init__(prefix + message)


class DuplicateGrayLevel(HistoryError):
    pass


class MissingGrayLevel(HistoryError):
    def __init__(self, level):
        self.level = level
        super().__init__(f"missing gray level {level}")


class InvalidTrajectory(HistoryError):
    pass

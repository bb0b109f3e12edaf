class DimensionError(ValueError):
    """Array shapes do not match the problem layout."""


class ProblemFormatError(ValueError):
    """A problem file is malformed. ``field`` names the offending JSON path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidProblem(ValueError):
    """The reference LP is infeasible or unbounded."""


class InvalidPenaltyBound(ValueError):
    """The dual box ``0 <= y <= t`` leaves no room for ``A_i^T y >= c_i``.

    The penalized block problem is then unbounded below, i.e. ``t`` is too
    small.
    """

    def __init__(self, message, block=None):
        if block is not None:
            message = f"block {block}: {message}"
        super().__init__(message)
        self.block = block


class MaxPivotsExceeded(RuntimeError):
    """The simplex hit its pivot cap (likely stalling on a degenerate vertex)."""


class OracleDisagreementWarning(RuntimeWarning):
    """Primal and dual evaluations of a block value differ by more than 1e-6."""

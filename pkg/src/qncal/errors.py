"""Exception hierarchy shared across the toolkit.

Argument problems raise plain ``ValueError`` (exit code 2 in the CLI).
"""


class ObjectiveError(RuntimeError):
    """An objective evaluation failed: bad grid file, protocol violation,
    non-finite reply, or a degenerate measurement (zero singles)."""


class InsufficientCountsError(ObjectiveError):
    """A count record had zero singles, so g2 cannot be estimated."""


class NumericError(RuntimeError):
    """A linear-algebra step failed beyond recovery (e.g. factorization
    after all jitter escalations)."""

    def __init__(self, message: str, condition_estimate: float | None = None):
        if condition_estimate is not None:
            message = f"{message} (condition estimate {condition_estimate:.3e})"
        super().__init__(message)
        self.condition_estimate = condition_estimate

"""Exception and warning types shared across the package."""


class DimensionMismatch(ValueError):
    """Raised when matrix shapes or attribute counts disagree."""


class CycleError(ValueError):
    """Raised when a prerequisite graph contains a directed cycle."""


class KTooLarge(ValueError):
    """Raised when profile enumeration would exceed the attribute cap."""


class NotASubset(ValueError):
    """Raised when a tested edge set is not contained in the hierarchy."""


class EmptySupport(ValueError):
    """Raised when an operation receives an empty profile support."""


class TooFewItems(ValueError):
    """Raised when a Q-matrix design asks for fewer items than it needs."""


class BaseProfileMissing(ValueError):
    """Raised when the all-zero profile is absent from a fit's support."""


class NestingError(RuntimeError):
    """Raised when a restricted fit beats the full fit it is nested in.

    Carries both log-likelihoods so callers can inspect the gap.
    """

    def __init__(self, loglik_null: float, loglik_alt: float):
        self.loglik_null = loglik_null
        self.loglik_alt = loglik_alt
        super().__init__(
            f"restricted log-likelihood {loglik_null:.9g} exceeds full "
            f"log-likelihood {loglik_alt:.9g} beyond tolerance"
        )


class WeightError(ValueError):
    """Raised when mixture weights do not sum to one."""


class InvalidDf(ValueError):
    """Raised for invalid chi-squared degrees of freedom."""


class UnknownMethod(KeyError):
    """Raised when a requested testing method is not available."""


class ColumnCountMismatch(ValueError):
    """Raised when a response file has the wrong number of item columns."""


class ParseError(ValueError):
    """Raised on malformed input files; message carries line/column."""

    def __init__(self, path: str, line: int, column: int, detail: str):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {detail}")


class DegenerateDataWarning(UserWarning):
    """Warned when an item's responses are constant across respondents."""

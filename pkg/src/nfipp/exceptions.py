"""Exception hierarchy shared by every nfipp module."""


class NFIPPError(Exception):
    """Base class for all package errors."""


class ArgumentError(NFIPPError, ValueError):
    """An argument is outside its valid domain."""


class AlignmentError(NFIPPError, ValueError):
    """Two series (or a series and a feature matrix) are not aligned."""


class DateRangeError(NFIPPError, IndexError):
    """A requested window lies outside the available data."""


class HistoryError(NFIPPError, ValueError):
    """Not enough look-back history to build a feature row."""


class TrainingDivergedError(NFIPPError, RuntimeError):
    """The training objective became non-finite."""

    def __init__(self, epoch, message=None, seed=None):
        self.epoch = epoch
        self.seed = seed
        if message is None:
            message = f"training diverged at epoch {epoch}"
        if seed is not None:
            message = f"{message} (scenario seed {seed})"
        super().__init__(message)


class GeneratorError(NFIPPError, RuntimeError):
    """The random intensity-function generator could not produce a valid function."""


class DataFormatError(NFIPPError, ValueError):
    """A data file row could not be parsed."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class DataValidationError(NFIPPError, ValueError):
    """Parsed data violates a plausibility rule (e.g. date bounds)."""


class CountryLookupError(NFIPPError, LookupError):
    """Unknown ISO-3166 alpha-3 country code."""

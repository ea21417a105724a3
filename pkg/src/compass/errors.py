"""Exception hierarchy shared across the workbench."""


class CompassError(Exception):
    """Base class for all workbench errors."""


class EmptyInputError(CompassError):
    """Raised when text input is empty after whitespace stripping."""


class CorpusParseError(CompassError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DuplicateIdError(CompassError):
    """A corpus contains two stories with the same id."""


class InvalidPolicyError(CompassError):
    """Corruption policy yields an empty missing-count range."""


class IndexOutOfRangeError(CompassError):
    pass


class DuplicateIndexError(CompassError):
    pass


class TooManyVariantsError(CompassError):
    """Exhaustive corruption enumeration would exceed the configured bound."""


class MarkerCollisionError(CompassError):
    """A sentence contains the special marker substring."""


class TooManyCompletionsError(CompassError):
    """More completions supplied than there are gaps to fill."""


class BackendUnavailableError(CompassError):
    pass


class SpecMissError(CompassError):
    """Oracle backend has no answer for the given input."""


class InputTooLongError(CompassError):
    pass


class AllCandidatesMalformedError(CompassError):
    """Every generated candidate was dropped during repair."""


class ReconciliationFailureError(CompassError):
    """Generated context sentences could not be aligned to the input."""


class EmptyCorpusError(CompassError):
    pass


class AdapterUnavailableError(CompassError):
    """External learned-metric scorer could not be reached."""


class ScorerUnavailableError(CompassError):
    pass


class DivergenceDetectedError(CompassError):
    """Training loss became NaN/inf; aborted with a state dump."""

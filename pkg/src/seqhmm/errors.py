"""Exception types shared across the package."""


class SeqHmmError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateModelError(SeqHmmError):
    """A model parameter is numerically unusable.

    Raised for non-positive-definite covariances, zero-variance training
    input, and similar collapses that make density evaluation meaningless.
    """


class InputDomainError(SeqHmmError, ValueError):
    """An observation or argument lies outside the model's domain."""


class TooShortInputError(SeqHmmError, ValueError):
    """Input is shorter than the minimum the operation needs.

    Carries both lengths so callers can report them.
    """

    def __init__(self, message: str, needed: int, got: int):
        super().__init__(message)
        self.needed = needed
        self.got = got


class EvaluationError(SeqHmmError):
    """An evaluation cannot be carried out on the given inputs."""

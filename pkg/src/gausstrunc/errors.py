"""Exception types raised across the package."""


class GaussTruncError(Exception):
    """Base class for package errors."""


class NotPositiveDefinite(GaussTruncError, ValueError):
    pass


class EmptyInterval(GaussTruncError, ValueError):
    pass


class DimensionMismatch(GaussTruncError, ValueError):
    pass


class TooFewSamples(GaussTruncError, ValueError):
    pass


class RootNotBracketed(GaussTruncError, RuntimeError):
    pass


class SpecParseError(GaussTruncError, ValueError):
    pass


class RejectionExhausted(GaussTruncError, RuntimeError):
    """A rejection sampler hit its attempt cap.

    Raised instead of looping forever when a body's Gaussian volume is too
    small for rejection to be practical.
    """

    def __init__(self, body, attempts: int):
        self.body = body
        self.attempts = attempts
        super().__init__(
            f"rejection sampling exhausted after {attempts} attempts for {body!r}; "
            "an exact strategy is required for this body"
        )

"""Exception types shared across the package."""


class RepeaterError(Exception):
    """Base class for every error raised by this package."""


class ModeError(RepeaterError):
    """Unknown, duplicate, or mismatched mode labels."""


class OccupationOverflowError(RepeaterError):
    """An operation would populate an occupation above the truncation.

    Raised instead of silently truncating, which would corrupt
    probabilities invisibly.
    """


class ImpossibleOutcomeError(RepeaterError):
    """Conditioning on an outcome whose probability is numerically zero."""


class ModelValidityError(RepeaterError):
    """Parameters leave the regime where the lumped-loss remodelling of the
    channel is valid (requires eta_t * eta_D <= eta_m)."""


class UndefinedQberError(RepeaterError):
    """No accepted click pattern has positive probability, so the bit error
    rate is undefined."""


class NoFeasiblePointError(RepeaterError):
    """A search found no parameter value with a positive key rate."""


class NoCrossoverError(RepeaterError):
    """Rate curves do not cross on the searched interval."""


class BracketEndError(RepeaterError):
    """The sought root lies at or beyond the end of the search bracket."""

    def __init__(self, message: str, bound: float):
        super().__init__(message)
        self.bound = bound

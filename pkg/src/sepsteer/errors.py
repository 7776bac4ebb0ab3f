"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """Malformed input: bad mode labels, out-of-range parameters, wrong shapes."""


class DegenerateInput(ValueError):
    """A matrix that must be inverted is singular or badly conditioned."""


class DomainError(ValueError):
    """A closed-form expression is evaluated outside its range of validity."""


class BracketError(ValueError):
    """A bisection bracket does not straddle the boundary being searched for."""

    def __init__(self, message, lo_value=None, hi_value=None):
        super().__init__(message)
        self.lo_value = lo_value
        self.hi_value = hi_value

"""Exception types shared across the toolkit."""


class MatchfairError(Exception):
    """Base class for all matchfair errors."""


class InvalidAgentError(MatchfairError, ValueError):
    """An agent index is out of range or on the wrong side."""


class InvalidMatchingError(MatchfairError, ValueError):
    """A matching is malformed or inconsistent with the profile."""


class InvalidInputError(MatchfairError, ValueError):
    """Malformed input to an operation (bad permutation, unstable matching, ...)."""


class DegenerateDistributionError(MatchfairError, ValueError):
    """Probability query on the phi=0 point-mass distribution."""


class RotationNotExposedError(MatchfairError, ValueError):
    """Attempt to eliminate a rotation that is not exposed in the matching."""


class BudgetExceededError(MatchfairError, RuntimeError):
    """An enumeration hit its matching-count or wall-time budget.

    Carries whatever was found so far, so callers can report censored
    partial results instead of losing the work.
    """

    def __init__(self, message, partial_matchings=(), visited=0):
        super().__init__(message)
        self.partial_matchings = tuple(partial_matchings)
        self.visited = visited if visited else len(self.partial_matchings)

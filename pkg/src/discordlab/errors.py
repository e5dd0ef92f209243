"""Exception types shared across the package."""


class DiscordLabError(Exception):
    """Base class for all package errors."""


class InvalidState(DiscordLabError, ValueError):
    """A matrix failed the two-qubit density-matrix checks.

    ``invariant`` names the check that failed (``"shape"``, ``"hermitian"``,
    ``"trace"`` or ``"positive"``).
    """

    def __init__(self, message, invariant=None):
        super().__init__(message)
        self.invariant = invariant


class NotAState(InvalidState):
    """Bloch data whose composed matrix is not positive semidefinite."""


class InvalidMoments(DiscordLabError, ValueError):
    pass


class SamplingExhausted(DiscordLabError, RuntimeError):
    pass


class InsufficientStatistics(DiscordLabError, RuntimeError):
    """No successful post-selected events were recorded."""


class UnknownMode(DiscordLabError, KeyError):
    pass

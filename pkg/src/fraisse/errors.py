"""Exception hierarchy shared by every kernel and the CLI."""


class FraisseError(Exception):
    """Base class for all library errors."""


class InputError(FraisseError, ValueError):
    """Malformed input: unknown generator, bad word text, stale letter name."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class DomainError(FraisseError, ValueError):
    """A mathematical precondition does not hold."""


class NeedsWitness(DomainError):
    """Conjugacy of two centralizers could not be decided without a witness."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class SearchFailure(FraisseError):
    """A bounded search (exponents, substitutions) exhausted its cap."""

    def __init__(self, message, attempted=None):
        super().__init__(message)
        self.attempted = attempted or {}

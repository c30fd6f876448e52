"""Exceptions raised by vnlab."""


class VnlabError(Exception):
    """Base class for all library errors."""


class AmbientMismatch(VnlabError, ValueError):
    """Two values live in different block algebras."""


class CapacityExceeded(VnlabError):
    """A projection cannot be placed because a block is too small."""


class NotCompatible(VnlabError):
    """A partial isometry's range cuts through a tuple of a homomorphism."""


class NotDominated(VnlabError):
    """Subtraction ``y - x`` was requested but ``x <= y`` fails."""


class NoHalf(VnlabError):
    """No element ``y`` with ``y + y == x`` exists."""


class NotRepresentable(VnlabError):
    """A dyadic multiple needs a half that does not exist."""


class NotDivisible(VnlabError):
    """The monoid has an element without a half; ``witness`` is such an element."""

    def __init__(self, witness):
        super().__init__(f"element {witness} has no half")
        self.witness = witness


class WitnessBudgetExceeded(VnlabError):
    """Orbit search ran out of witness budget before closing the orbits."""


class SketchTooLarge(VnlabError):
    """The truncated sketch would exceed the configured object cap."""


class TheoremViolation(VnlabError, AssertionError):
    """A statement proved in general failed on a concrete instance.

    This signals a bug in the library, never a mathematical discovery.
    """


class UsageError(VnlabError):
    """Malformed configuration or command line input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line

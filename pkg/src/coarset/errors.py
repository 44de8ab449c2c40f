"""Exception hierarchy shared by all modules."""


class CoarseError(Exception):
    """Base class for errors raised by coarset."""


class DomainError(CoarseError, ValueError):
    """An argument lies outside the domain of an operation (wrong space, bad shape, ...)."""


class PreconditionError(CoarseError, ValueError):
    """A mathematical precondition of an operation does not hold."""


class NotGeneratingError(PreconditionError):
    """A controlled set was required to be generating but is not."""


class InvariantViolation(CoarseError, AssertionError):
    """An identity that must hold by construction failed a numerical self-check."""


class InputError(CoarseError, ValueError):
    """An input file is missing, unreadable or malformed."""

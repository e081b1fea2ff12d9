"""Exception hierarchy shared by every module."""


class GptError(Exception):
    """Base class for all library errors."""


class InvalidArgument(GptError, ValueError):
    pass


class DegenerateCone(GptError):
    """Generators do not span a pointed, full-dimensional cone."""


class UnsupportedSystem(GptError):
    pass


class UnsupportedDimension(GptError):
    pass


class PositivityViolation(GptError):
    """A map sent a cone element outside the target cone."""


class NotDistinguishable(GptError):
    pass


class InvalidDistribution(GptError, ValueError):
    pass


class ConservationError(GptError):
    """Particle fractions were not conserved by a step."""


class NotMixable(GptError):
    pass


class NotACycle(GptError):
    def __init__(self, message, ledger=None):
        super().__init__(message)
        self.ledger = ledger


class InvalidLedger(GptError):
    pass


class PreconditionError(GptError):
    pass


class InvalidScenario(GptError):
    pass

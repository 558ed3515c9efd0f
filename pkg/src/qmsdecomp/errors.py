"""Exception hierarchy shared by every analysis stage."""


class QmsError(Exception):
    """Base class for all errors raised by :mod:`qmsdecomp`."""


class NotHermitian(QmsError):
    pass


class ShapeMismatch(QmsError):
    pass


class ConvergenceFailure(QmsError):
    pass


class DegenerateCenter(QmsError):
    """Central eigenvalue clustering was ambiguous at the configured tolerance."""


class ModelInvalid(QmsError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(QmsError):
    pass


class NotAState(QmsError):
    pass


class NotInvariant(QmsError):
    pass


class NoFaithfulState(QmsError):
    pass


class NonSemisimplePeripheral(QmsError):
    pass


class BlockMismatch(QmsError):
    pass


class CommutationFailure(QmsError):
    pass


class SamplingExhausted(QmsError):
    pass

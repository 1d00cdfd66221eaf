"""Exception types raised across the package."""


class KisError(ValueError):
    """Base class for all domain errors."""


class EmptyInput(KisError):
    pass


class NoWords(KisError):
    pass


class EmptyCorpus(KisError):
    pass


class Unreachable(KisError):
    pass


class BufferFull(KisError):
    pass


class DegenerateBuffer(KisError):
    pass


class NoMaskableTokens(KisError):
    pass


class NoReferences(KisError):
    pass


class ComponentOutOfRange(KisError):
    pass


class NonFiniteGradient(KisError, ArithmeticError):
    pass


class ModelFormatError(KisError):
    """Serialized model has a bad magic header or truncated payload."""

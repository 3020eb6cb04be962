"""Exception types. ``exit_code`` is what the CLI returns when one escapes."""


class MinContrastError(Exception):
    exit_code = 3


class ValidationError(MinContrastError, ValueError):
    exit_code = 2


class EmptyErosion(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class DegenerateInput(MinContrastError):
    pass


class ZeroIntensity(MinContrastError):
    pass


class WeightOverflow(MinContrastError):
    pass


class NegativeBase(MinContrastError):
    pass


class EmbeddingFailure(MinContrastError):
    pass


class SingularB(MinContrastError, ArithmeticError):
    pass


class NonConvergence(MinContrastError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result

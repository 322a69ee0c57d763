"""Exception types shared across the package."""


class InvalidNodeError(ValueError):
    pass


class InvalidPartitionError(ValueError):
    pass


class TooSmallError(ValueError):
    pass


class TooLargeError(ValueError):
    pass


class EmptySampleSetError(ValueError):
    pass


class NoFeasibleSampleError(RuntimeError):
    """Forced split requested but the sample set holds no proper bipartition."""

    def __init__(self, message, coalition=None):
        super().__init__(message)
        self.coalition = coalition


class TleParseError(ValueError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class TleChecksumWarning(UserWarning):
    pass


class OutOfWindowError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass

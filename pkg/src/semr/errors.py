"""Exception types raised across the package."""


class SemrError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SemrError, ValueError):
    pass


class NotPsd(SemrError, ValueError):
    def __init__(self, message="matrix is not positive semi-definite", arm=None):
        if arm is not None:
            message = f"arm {arm}: {message}"
        super().__init__(message)
        self.arm = arm


class Singular(SemrError, ValueError):
    pass


class GammaViolated(SemrError, ValueError):
    def __init__(self, arm, norm, gamma):
        super().__init__(f"arm {arm}: Frobenius norm {norm:.6g} exceeds gamma {gamma:.6g}")
        self.arm = arm
        self.norm = norm
        self.gamma = gamma


class HorizonTooSmall(SemrError, ValueError):
    pass


class CountMismatch(SemrError, ValueError):
    pass


class ZeroGap(SemrError, ValueError):
    pass


class LambdaTooLarge(SemrError, ValueError):
    pass


class NonPositiveVariance(SemrError, ValueError):
    pass


class NonPositiveRegret(SemrError, ValueError):
    pass


class EmptyInput(SemrError, ValueError):
    pass


class ConfigError(SemrError):
    """Problem with an experiment configuration (CLI exit code 2)."""


class ParseError(ConfigError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(ConfigError):
    def __init__(self, field, message=None):
        super().__init__(field if message is None else f"{field}: {message}")
        self.field = field

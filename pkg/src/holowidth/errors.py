"""Exception hierarchy. Everything raised on purpose derives from HolowidthError."""


class HolowidthError(Exception):
    """Base class; the CLI maps these to exit status 1."""


class DegreeLimitError(HolowidthError):
    pass


class ConfigurationError(HolowidthError):
    pass


class DomainError(HolowidthError, ValueError):
    pass


class PreconditionError(HolowidthError, ValueError):
    pass


class DegenerateBoxError(HolowidthError, ZeroDivisionError):
    pass


class CombinatorialBlowupError(HolowidthError):
    def __init__(self, message, predicted_size):
        super().__init__(message)
        self.predicted_size = predicted_size


class BasisError(HolowidthError):
    pass


class NotEllipticError(HolowidthError):
    def __init__(self, minimum):
        super().__init__(f"coefficient is not elliptic: min Re(a) = {minimum:.6g} <= 0")
        self.minimum = minimum


class DivergenceError(HolowidthError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class RateFitError(HolowidthError):
    def __init__(self, message, first_zero=None):
        super().__init__(message)
        self.first_zero = first_zero


class FormatError(HolowidthError):
    pass

"""Exception hierarchy shared by all modules."""


class RgaKanError(Exception):
    pass


class ConfigurationError(RgaKanError, ValueError):
    """Invalid settings, unsupported primitive or illegal combination."""


class DomainError(RgaKanError, ValueError):
    """An operation was evaluated outside its mathematical domain."""


class NumericError(RgaKanError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""


class DegenerateBasisError(RgaKanError, ValueError):
    """A basis term has (numerically) zero variance."""


class DegenerateMomentError(RgaKanError, ValueError):
    pass


class ContractError(RgaKanError, ValueError):
    """Inputs do not match what an operation declares it needs."""


class UnsupportedError(RgaKanError, NotImplementedError):
    pass


class ParseError(RgaKanError, ValueError):
    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class ValidationError(RgaKanError, ValueError):
    pass


class InstabilityError(RgaKanError, ArithmeticError):
    pass


class AggregationError(RgaKanError, ValueError):
    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = list(missing)


class DivergenceError(RgaKanError, ArithmeticError):
    """Training produced non-finite losses for too many consecutive steps."""

    def __init__(self, message, history=None, iteration=None):
        super().__init__(message)
        self.history = history
        self.iteration = iteration


class UndefinedMetricError(RgaKanError, ValueError):
    """A metric has no meaningful value for the given inputs (e.g. a zero reference)."""

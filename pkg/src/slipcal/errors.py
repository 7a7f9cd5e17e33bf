"""Exception hierarchy shared by every pipeline stage."""


class SlipcalError(Exception):
    """Base class for all errors raised by slipcal."""


class EmptyInput(SlipcalError, ValueError):
    pass


class DimensionMismatch(SlipcalError, ValueError):
    pass


class NonFiniteSample(SlipcalError, ValueError):
    pass


class DegenerateSignal(SlipcalError, ValueError):
    pass


class MissingCell(SlipcalError, ValueError):
    pass


class InsufficientData(SlipcalError, ValueError):
    pass


class WindowTooLarge(SlipcalError, ValueError):
    pass


class TooFewSamples(SlipcalError, ValueError):
    pass


class PoolTooShort(SlipcalError, ValueError):
    pass


class NoSignificantBand(SlipcalError, ValueError):
    pass


class EmptyBand(SlipcalError, ValueError):
    pass


class EmptyDataset(SlipcalError, ValueError):
    pass


class WindowSizeMismatch(SlipcalError, ValueError):
    pass


class IndivisibleWindow(SlipcalError, ValueError):
    pass


class InvalidCombination(SlipcalError, ValueError):
    pass


class InvariantViolation(SlipcalError, ValueError):
    pass


class ParseError(SlipcalError, ValueError):
    """Malformed input file; ``line`` and ``column`` locate the problem (1-based)."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class PreconditionError(SlipcalError, ValueError):
    pass

"""Exception types raised by mkfilter.

All errors derive from :class:`MKFilterError`, which is a ``ValueError`` so
that callers catching plain ``ValueError`` keep working.
"""


class MKFilterError(ValueError):
    pass


class NotPositiveDefinite(MKFilterError):
    pass


class DimMismatch(MKFilterError):
    pass


class KindMismatch(MKFilterError):
    pass


class InvalidDistanceMatrix(MKFilterError):
    pass


class EmptyClass(MKFilterError):
    pass


class SingleClass(MKFilterError):
    pass


class BadSize(MKFilterError):
    pass


class TooFewPerClass(MKFilterError):
    pass


class LengthMismatch(MKFilterError):
    pass


class BadParam(MKFilterError):
    pass


class BadConfig(MKFilterError):
    pass


class BadSet(MKFilterError):
    pass


class TooFewNeighbors(MKFilterError):
    pass


class ParseError(MKFilterError):
    """Malformed input file; carries the file path and 1-based line number."""

    def __init__(self, path, line, reason):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


class ValidationError(MKFilterError):
    """Parsed input that violates a dataset invariant."""

    def __init__(self, column, reason):
        self.column = column
        self.reason = reason
        where = "labels" if column is None else f"column {column}"
        super().__init__(f"{where}: {reason}")

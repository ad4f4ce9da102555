class CasbrError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(CasbrError, ValueError):
    pass


class EdgeListParseError(CasbrError, ValueError):
    def __init__(self, line_no, line, reason="expected two nonnegative integer node ids"):
        self.line_no = line_no
        self.line = line
        super().__init__(f"line {line_no}: {reason}: {line!r}")


class UndefinedQuantityError(CasbrError, ArithmeticError):
    """A probability, score or estimate has an empty denominator."""


class InvalidAssignmentError(CasbrError, ValueError):
    pass


class InvalidPartitionError(CasbrError, ValueError):
    pass

"""Exception hierarchy."""


class RcposError(Exception):
    """Base class for all errors raised by this package."""


class NotHermitian(RcposError, ValueError):
    pass


class NoConvergence(RcposError, RuntimeError):
    pass


class ParseError(RcposError, ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class NonHermitianSpec(RcposError, ValueError):
    pass


class MissingDiagonal(RcposError, ValueError):
    pass


class UnknownCatalogEntry(RcposError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class BadParameter(RcposError, ValueError):
    pass


class OutOfDomain(RcposError, ValueError):
    pass


class SingularExpression(RcposError, ZeroDivisionError):
    pass


class NotPositiveDefinite(RcposError, ValueError):
    pass


class SingularMetric(RcposError, ValueError):
    pass


class RankMismatch(RcposError, ValueError):
    pass


class RankOverflow(RcposError, ValueError):
    pass


class BadIndexSet(RcposError, ValueError):
    pass


class FrameDegenerate(RcposError, ValueError):
    pass


class GaugeFailure(RcposError, RuntimeError):
    pass


class DimensionMismatch(RcposError, ValueError):
    pass


class NotKahler(RcposError, ValueError):
    pass

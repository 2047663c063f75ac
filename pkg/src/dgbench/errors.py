"""Exception types shared across the package."""


class DgBenchError(Exception):
    """Base class for every error raised by dgbench."""


class UnsupportedRing(DgBenchError):
    pass


class NoSolution(DgBenchError):
    pass


class ShapeMismatch(DgBenchError):
    pass


class NotWellDefined(DgBenchError):
    """A matrix does not induce a map between the given presentations."""


class UnboundedProduct(DgBenchError):
    pass


class IncompatiblePairing(DgBenchError):
    pass


class MaurerCartanViolation(DgBenchError):
    pass


class NotStrictIdempotent(DgBenchError):
    pass


class CapOverflowPolicyRequired(DgBenchError):
    pass


class CapOverflow(DgBenchError):
    """Raised under the ``reject`` policy when a composite is too long."""


class NoEquivalenceFound(DgBenchError):
    pass


class SquareNotStrictlyCommutative(DgBenchError):
    pass


class UnsupportedCoverSize(DgBenchError):
    pass


class SetupViolated(DgBenchError):
    def __init__(self, detail):
        super().__init__(detail)
        self.detail = detail


class WindowViolation(DgBenchError):
    pass


class UnknownExample(DgBenchError):
    pass


class ParseError(DgBenchError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason

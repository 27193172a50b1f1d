"""Exception hierarchy shared by every proxipoint module."""


class ProxipointError(Exception):
    """Base class for all library errors."""


class HypothesisFailure(ProxipointError):
    """A standing hypothesis of a best-proximity theorem fails on the instance.

    The CLI maps every subclass to exit code 2.
    """


# geometry
class DimensionMismatch(ProxipointError):
    pass


class EmptyAfterTruncation(ProxipointError):
    pass


# expression language
class MapSyntaxError(ProxipointError):
    def __init__(self, position: int, expected: str, text: str = ""):
        self.position = position
        self.expected = expected
        self.text = text
        super().__init__(f"syntax error at position {position}: expected {expected}")


class ArityError(ProxipointError):
    pass


class UnknownVariable(ProxipointError):
    pass


class GuardMiss(ProxipointError):
    pass


class NumericError(ProxipointError):
    pass


class EvalError(NumericError):
    """Relation evaluation produced a non-finite value."""


# relation catalog
class UnknownName(ProxipointError):
    pass


class ParamOutOfRange(ProxipointError):
    pass


# proximal engine
class EmptyProximalSet(HypothesisFailure):
    pass


class NoFeasiblePoint(HypothesisFailure):
    pass


class SequenceMissing(HypothesisFailure):
    pass


class DistZero(HypothesisFailure):
    pass


class OutsideRegion(ProxipointError):
    pass


# solvers
class StartNotProximal(ProxipointError):
    pass


class Diverging(ProxipointError):
    pass


class MaxIterExceeded(ProxipointError):
    pass


class SubsequenceNotFound(ProxipointError):
    pass


class TooShort(ProxipointError):
    pass


class RateGeqOne(ProxipointError):
    pass


class RateBoundViolated(ProxipointError):
    pass


# configuration / CLI
class SchemaError(ProxipointError):
    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class UnknownExample(ProxipointError):
    pass


class IoError(ProxipointError):
    pass

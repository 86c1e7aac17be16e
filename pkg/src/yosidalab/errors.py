"""Exception types raised by the lab's numerical operations."""


class YosidaLabError(Exception):
    """Base class for all lab errors."""


class DimensionMismatch(YosidaLabError):
    pass


class NonFiniteResult(YosidaLabError):
    pass


class LambdaInSpectrum(YosidaLabError):
    pass


class SingularPrefactor(YosidaLabError):
    pass


class UnboundedModel(YosidaLabError):
    pass


class GridTooShort(YosidaLabError):
    pass


class NonConvergentYosidaLimit(YosidaLabError):
    pass


class StepSizeTooCoarse(YosidaLabError):
    pass


class NotHyperbolic(YosidaLabError):
    pass


class BaseNotHyperbolic(YosidaLabError):
    pass


class IllConditionedSplit(YosidaLabError):
    pass


class NewtonDiverged(YosidaLabError):
    """Newton failed to meet the residual target.

    Carries the best iterate found and its residual so callers can salvage
    diagnostics.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class JacobianSingular(YosidaLabError):
    pass


class JacobianUnavailable(YosidaLabError):
    pass


class GapTooSmall(YosidaLabError):
    pass


class NotConverged(YosidaLabError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ScenarioParseError(YosidaLabError):
    """Scenario file failed to parse or validate (CLI exit code 2)."""

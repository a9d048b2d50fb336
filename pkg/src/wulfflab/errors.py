"""Exception hierarchy shared by the solver modules."""


class WulffLabError(Exception):
    """Base class for all library errors."""


class ConfigError(WulffLabError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SolverError(WulffLabError):
    pass


class ZeroVector(WulffLabError, ValueError):
    pass


class DegeneratePolygon(WulffLabError, ValueError):
    pass


class NotConvex(WulffLabError, ValueError):
    pass


class EmptyTarget(WulffLabError, ValueError):
    pass


class EpsilonUnresolvable(WulffLabError, ValueError):
    pass


class InfeasibleDual(WulffLabError, ValueError):
    pass


class TooLarge(WulffLabError, ValueError):
    pass


class BadExponent(WulffLabError, ValueError):
    pass


class BadT(WulffLabError, ValueError):
    pass


class InvalidP(BadExponent):
    pass


class NotDisjoint(WulffLabError, ValueError):
    pass


class EmptyLevelSet(SolverError):
    pass


class NonConvergence(SolverError):
    pass


class BisectionFailure(SolverError):
    pass


class NoRoomForPair(SolverError):
    pass

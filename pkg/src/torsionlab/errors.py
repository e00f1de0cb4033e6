"""Exception types raised across the package."""


class TorsionLabError(Exception):
    """Base class for all package errors."""


class NonPositiveRadius(TorsionLabError, ValueError):
    pass


class DegenerateMesh(TorsionLabError):
    pass


class NoConvergence(TorsionLabError):
    pass


class SingularSystem(TorsionLabError):
    pass


class EigenNoConvergence(TorsionLabError):
    pass


class InvalidConfig(TorsionLabError, ValueError):
    pass


class FNormViolation(TorsionLabError, ValueError):
    """Right-hand side exceeds the unit sup-norm bound."""


class EmptyDictionary(TorsionLabError, ValueError):
    pass


class DegenerateGradient(TorsionLabError):
    """Boundary gradient vanishes somewhere (nondegeneracy violated)."""


class LineSearchFailure(TorsionLabError):
    pass


class NotNormalized(TorsionLabError, ValueError):
    pass


class ClusterMismatch(TorsionLabError):
    pass


class MultiplicityWarning(UserWarning):
    pass

"""Exception types shared across the package."""


class BundleLabError(Exception):
    """Base class for all errors raised by the library."""


class PoleError(BundleLabError):
    """A stereographic projection was asked to map its own pole."""


class OverlapError(BundleLabError):
    """A chart transition was applied outside the overlap of the two charts."""


class DomainError(BundleLabError):
    """Coordinates fall outside the open domain of their chart."""


class StepFailure(BundleLabError):
    """The adaptive integrator could not find an acceptable step size."""


class ChartExit(BundleLabError):
    """No supported chart covers the current state."""


class NotClosed(BundleLabError):
    """No return to the starting point was found."""


class NoReturn(BundleLabError):
    """No crossing of the section within the time bound."""


class TangentialCrossing(BundleLabError):
    """The field is (numerically) tangent to the section at a crossing."""


class JacobianUnavailable(BundleLabError):
    """A lift needs the Jacobian along the distinguished curve but none was given."""


class TooClose(BundleLabError):
    """Two curves come too close for a reliable linking integral."""


class Ambiguous(BundleLabError):
    """A numerically computed integer invariant is not close to an integer."""


class UndersampledError(BundleLabError):
    """Too few samples to resolve a winding number."""


class SupportError(BundleLabError):
    """A compactly supported object is nonzero outside its declared support."""


class PeriodicityViolation(BundleLabError):
    """An iterate of a return map failed to be the identity (or was unexpectedly so)."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NotPeriodic(BundleLabError):
    """A map expected to be periodic is not."""


class NonReturningBase(BundleLabError):
    """The base projection of a leaf does not close up."""


class ConfigError(BundleLabError):
    """Invalid experiment configuration."""


class ExperimentFailure(BundleLabError):
    """An experiment ran but one of its checks failed."""

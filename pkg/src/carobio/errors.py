"""Exception hierarchy shared across the pipeline."""


class CarobioError(Exception):
    """Base class for every error raised by this package."""


class InfeasibleGeometry(CarobioError, ValueError):
    """Fingernail/cable radii admit no tangent contact."""


class StrokeOutOfDomain(CarobioError, ValueError):
    """Requested stroke lies outside the valid tangent-contact interval."""


class ZeroFriction(CarobioError, ValueError):
    pass


class DegenerateDirection(CarobioError, ValueError):
    pass


class DegeneratePolyline(CarobioError, ValueError):
    pass


class NoRegionFound(CarobioError):
    pass


class DegenerateCovariance(CarobioError, ValueError):
    pass


class AllPointsDiscarded(CarobioError):
    pass


class AmbiguousTopology(CarobioError):
    """Cable cloud looks branched (more than two extremities)."""


class PreprocessError(CarobioError):
    """Cable could not be moved clear of the slot exclusion zones."""


class NoAnchorAvailable(PreprocessError):
    pass


class MaxIterationsExceeded(PreprocessError):
    pass


class NoCandidates(CarobioError):
    pass


class DegenerateArc(CarobioError, ValueError):
    pass


class CableNotNearSlot(CarobioError):
    pass


class ScenarioError(CarobioError):
    """Scenario file is unreadable or violates the schema."""

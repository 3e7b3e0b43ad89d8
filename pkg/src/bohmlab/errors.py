"""Exception hierarchy shared by all bohmlab modules."""


class BohmLabError(Exception):
    """Base class; ``kind`` is the machine-readable tag used in error records."""

    kind = "error"


class InvalidConfigError(BohmLabError, ValueError):
    kind = "invalid-config"


class DegenerateStateError(BohmLabError, ValueError):
    kind = "degenerate-state"


class GridMismatchError(BohmLabError, ValueError):
    kind = "grid-mismatch"


class ResolutionError(BohmLabError, ValueError):
    kind = "resolution"


class GeometryError(BohmLabError, ValueError):
    kind = "geometry"


class NumericError(BohmLabError, RuntimeError):
    kind = "numeric"


class PropagationIntegrityError(BohmLabError, RuntimeError):
    kind = "propagation-integrity"


class DomainTooSmallError(BohmLabError, RuntimeError):
    kind = "domain-too-small"


class IntegrityError(BohmLabError, RuntimeError):
    """Too many trajectories were rejected for a statistic to be trusted."""

    kind = "integrity"

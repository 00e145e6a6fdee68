"""Exception types raised by the package."""


class MixedIscError(Exception):
    """Base class for errors raised by this package."""


class GraphError(MixedIscError, ValueError):
    """Malformed network input or an undefined graph operator."""


class ConvergenceError(MixedIscError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


class InvalidParametersError(MixedIscError, ValueError):
    """DCMM parameters violate the model constraints."""


class SingularCentersError(MixedIscError, ValueError):
    """Cluster centers are (numerically) linearly dependent."""


class UndefinedRatioError(MixedIscError, ValueError):
    """The K-th eigenvalue is zero, so the eigen-ratio gap is undefined."""

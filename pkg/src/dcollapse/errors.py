"""Exception types shared across the package."""


class ResolutionError(RuntimeError):
    """Grid or quadrature resolution is insufficient for the requested state."""


class InstabilityError(RuntimeError):
    """A time step produced growth incompatible with the trusted step size."""


class NormLossError(RuntimeError):
    """A trajectory's norm collapsed to zero (unphysical branch selected)."""


__all__ = ["ResolutionError", "InstabilityError", "NormLossError"]

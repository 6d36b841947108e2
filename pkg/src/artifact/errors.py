"""Exception types raised across the package."""

from __future__ import annotations


class ArtifactError(Exception):
    """Base class for all package errors."""


class ZeroGradientPoint(ArtifactError, ValueError):
    """A smooth-calculus quantity was requested at z = 0, where E is not differentiable."""


class InvalidRange(ArtifactError, ValueError):
    """Gradient window bounds are not ordered or not positive."""


class NotSymmetric(ArtifactError, ValueError):
    """A matrix expected to be symmetric is not."""


class InvalidExponent(ArtifactError, ValueError):
    """An Lp exponent below 1 was supplied."""


class ZeroStep(ArtifactError, ValueError):
    """A difference quotient was requested with a zero step."""


class GridMismatch(ArtifactError, ValueError):
    """Fields or problem data live on different grids."""


class InvalidOptions(ArtifactError, ValueError):
    """Solver options are out of range."""


class NotConverged(ArtifactError, RuntimeError):
    """The solver hit its iteration cap; ``pair`` holds the best iterate."""

    def __init__(self, message: str, pair=None):
        super().__init__(message)
        self.pair = pair


class BoundaryOrderViolated(ArtifactError, ValueError):
    """Boundary data of a comparison pair are not ordered."""


class NotConvex(ArtifactError, ValueError):
    """A convex field was required."""


class BoundaryNode(ArtifactError, ValueError):
    """Two-sided information was requested at a boundary node."""


class WindowTooLarge(ArtifactError, ValueError):
    """A blow-up window leaves the sampled domain."""


class CenterSingularity(ArtifactError, ValueError):
    """A radial barrier was evaluated at its center."""


class SlabTooNarrow(ArtifactError, ValueError):
    """The test box half-width reaches the facet slab width."""


class InvalidDimension(ArtifactError, ValueError):
    """The requested construction needs a larger space dimension."""


class NotGeneralized(ArtifactError, ValueError):
    """A generalized (anisotropic) energy model was required."""

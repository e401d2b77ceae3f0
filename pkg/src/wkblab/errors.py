"""Exception types shared across the package.

Every numeric failure mode raises a subclass of :class:`NumericError` so the
CLI can map them onto a single exit code; configuration problems raise
:class:`ConfigError` and map onto a different one.
"""


class WkblabError(Exception):
    """Base class for all package errors."""


class ConfigError(WkblabError):
    """Invalid or inconsistent run configuration."""


class NumericError(WkblabError):
    """Base class for numeric-module failures."""


class RootFindError(NumericError):
    """Root search did not converge to the required residual."""


class QuadratureError(NumericError):
    """Quadrature failed to reach its tolerance.

    Carries the achieved error estimate in ``achieved``.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class BranchViolationError(NumericError):
    """A path crossed (or entered the exclusion tube of) the branch cut."""


class ResolutionError(NumericError):
    """Adaptive refinement exceeded its depth limit."""


class RegionError(NumericError):
    """A point lies outside the region where the requested expansion is valid."""


class ContractionError(NumericError):
    """A fixed-point iteration failed to contract (parameter too small)."""


class StepUnderflowError(NumericError):
    """Adaptive integrator step size underflowed before reaching tolerance."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class StencilError(NumericError):
    """A finite-difference stencil is under-resolved."""


class ConditioningError(NumericError):
    """A local linear solve is too ill-conditioned to trust."""


class AliasingError(NumericError):
    """Sampled data touches the grid edge; the transform would alias."""


class DynamicRangeError(NumericError):
    """Signal fell below the numeric noise floor before the fit window."""


class OverflowGuardError(NumericError):
    """A log-scaled value was asked to convert outside floating-point range."""

"""Exception types shared across the package."""


class TdscatterError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TdscatterError):
    """Malformed configuration input (bad key, unparsable value, bad line)."""


class PhysicsPreconditionError(TdscatterError):
    """A physical precondition of an operation is violated."""


class GridTooNarrowError(PhysicsPreconditionError):
    """Spatial grid does not contain the packet to the required tolerance."""


class SupportOverlapError(PhysicsPreconditionError):
    """Packet overlaps the barrier region too strongly for a projection."""


class BoundaryContaminationError(PhysicsPreconditionError):
    """Propagated wave reached the hard-wall boundary."""


class StepSizeError(PhysicsPreconditionError):
    """Integrator step too large to resolve the fastest phase."""


class WindowError(PhysicsPreconditionError):
    """Momentum-filter window does not fit inside the domain."""


class NumericalConvergenceError(TdscatterError):
    """A numerical procedure failed to reach its accuracy target."""


class IllConditionedMatchError(NumericalConvergenceError):
    """Eigenstate matching system is numerically ill conditioned."""


class QuadratureError(NumericalConvergenceError):
    """Panel quadrature did not converge under refinement."""


class EnvelopeError(NumericalConvergenceError):
    """Argument outside the documented accuracy envelope of a special function."""


class RegimeWarning(UserWarning):
    """An asymptotic formula is being evaluated outside its validity regime."""

"""Exception types raised by the analysis, oracle and simulation code."""


class ResetVerdictError(Exception):
    """Base class for all errors raised by this package."""


class PoleAtFrequency(ResetVerdictError):
    """A transfer function was evaluated (numerically) on one of its poles."""


class RootFindingDiverged(ResetVerdictError):
    """Polynomial root finding produced non-finite roots."""


class AmbiguousOriginPole(ResetVerdictError):
    """Numerator and denominator both vanish at s = 0."""


class ImproperTransferFunction(ResetVerdictError):
    """The operation needs a proper (or strictly proper) transfer function."""


class ZeroVector(ResetVerdictError):
    """The Nyquist stability vector vanished, so its angle is undefined."""


class ZeroVectorEncountered(ZeroVector):
    """A frequency sweep contains a sample where the stability vector vanished."""


class PoleOnGrid(ResetVerdictError):
    """A frequency grid point coincides with a pole on the imaginary axis."""


class InternalInconsistency(ResetVerdictError):
    """Two equivalent formulations of the same classification disagreed."""


class ClosedLoopPoleOnAxis(ResetVerdictError):
    """1 + L(jw) vanished, so Re(H(jw)) is undefined."""


class StepSizeCollapse(ResetVerdictError):
    """The ODE integrator could not advance."""


class ZenoDetected(ResetVerdictError):
    """The number of reset events exceeded the configured cap."""


class InputError(ResetVerdictError):
    """A system description or signal specification could not be parsed."""

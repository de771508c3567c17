"""Exception hierarchy shared by all modules."""


class HypAnnulusError(Exception):
    """Base class for every error raised by the package."""


class GridError(HypAnnulusError, ValueError):
    """Grid parameters violate a precondition (size, cutoff, resolution)."""


class TailDominatedError(HypAnnulusError):
    """A quadrature is dominated by its cutoff node; the cutoff is too small."""


class DegenerateDenominatorError(HypAnnulusError, ZeroDivisionError):
    """Series recursion hit a zero denominator (lambda = -i(k+1))."""


class SeriesOverflowError(HypAnnulusError, OverflowError):
    """Series coefficients exceeded the representable range."""


class ConvergenceError(HypAnnulusError):
    """A series or integrator did not reach the requested accuracy."""


class IllConditionedError(HypAnnulusError):
    """A linear fit or extraction is numerically ill-conditioned."""


class CalibrationError(HypAnnulusError):
    """An empirically fixed convention or constant could not be determined."""


class UnsupportedError(HypAnnulusError, NotImplementedError):
    """The requested operation is not supported for these inputs."""


class ResolutionError(HypAnnulusError):
    """The sampling is too coarse for the requested finite-difference operator."""


class RelationError(HypAnnulusError):
    """A sequence f_k violates Delta f_k = f_{k+1}."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class ConfigError(HypAnnulusError, ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ScenarioError(HypAnnulusError):
    """A scenario stage failed; carries the stage name and the related config field."""

    def __init__(self, message, stage=None, field=None):
        super().__init__(f"[{stage}] {message}" + ("" if field is None else f" (config field: {field})"))
        self.stage = stage
        self.field = field

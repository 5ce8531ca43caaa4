"""Exception hierarchy shared by all modules."""


class DispCancelError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DispCancelError, ValueError):
    """A physical parameter lies outside its allowed range."""


class ConfigurationError(DispCancelError, ValueError):
    """The numerical set-up (grid, resolution, combination of options) is unusable."""


class UnsupportedError(ConfigurationError):
    """A requested combination has no implementation (e.g. closed form with slow detector)."""


class DegenerateSourceError(DispCancelError, ValueError):
    """The accidentals level vanishes, so a contrast is undefined."""


class WidthUndefinedError(DispCancelError, ValueError):
    """No half-maximum crossing was found inside the reported window."""


class SemiclassicalError(DispCancelError, ValueError):
    """A nonclassical source was handed to the semiclassical Monte Carlo."""


class FactorizationError(DispCancelError, ValueError):
    """A per-bin covariance matrix is not positive semidefinite."""

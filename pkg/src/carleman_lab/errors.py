"""Guard exceptions shared across the lab.

Every guard that a numerical routine can trip is a distinct class so callers
(and the CLI's exit-code mapping) can tell configuration mistakes apart from
genuine numerical trouble.
"""


class CarlemanLabError(Exception):
    """Base class for all guard exceptions raised by this package."""


class EmptyRegion(CarlemanLabError):
    """A region mask touched no grid cell."""


class DegenerateBand(CarlemanLabError):
    """A cutoff transition band has zero (or negative) width."""


class GridTooSmall(CarlemanLabError):
    """A stencil needs more points than the grid provides."""


class SupportTooWide(CarlemanLabError):
    """A field's time support reaches too close to the grid edge for a
    Fourier multiplier to be trustworthy (wrap-around hazard)."""


class SupportViolation(CarlemanLabError):
    """A field is nonzero where a probe requires it to vanish."""


class InsufficientSweep(CarlemanLabError):
    """A parameter sweep has too few samples to fit an envelope."""


class CflViolation(CarlemanLabError):
    """Time step too large for the explicit scheme's stability bound."""


class NonFiniteDetected(CarlemanLabError):
    """NaN or inf appeared where finite values are required."""


class LevelMismatch(CarlemanLabError):
    """Two relations were chained whose levels do not meet."""


class PreconditionViolated(CarlemanLabError):
    """An optimization lemma's hypothesis fails for the supplied tuple."""


class NumericalOverflow(CarlemanLabError):
    """An exponential weight exceeded the floating range; rescale first."""


class DegenerateObservation(CarlemanLabError):
    """The observation functional vanished while the observed quantity did
    not.  Reported by the stability suite rather than raised mid-ensemble."""

"""Exception types raised by the simulator and the statistics layer."""


class SinaiError(Exception):
    """Base class for all package errors."""


class HorizonViolated(SinaiError):
    """A free flight exceeded the table's certified free-path bound."""


class GrazingCollision(SinaiError):
    """A collision was too close to tangential to resolve reliably."""


class InfiniteHorizonSuspected(SinaiError):
    """The table failed the corridor certificate or a probe flight ran away."""


class OverlappingTargets(SinaiError):
    """Two scaled target balls intersect."""


class TooFewSamples(SinaiError):
    """A statistical test was called with fewer samples than it supports."""


class DegenerateCells(SinaiError):
    """Chi-square categories could not be merged to the minimum expected count."""


class ZeroMean(SinaiError):
    """Dispersion test called on all-zero counts."""

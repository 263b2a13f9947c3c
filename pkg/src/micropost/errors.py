"""Exception hierarchy. Each error names the structural assumption that failed."""


class MicropostError(Exception):
    """Base class for all domain errors raised by this package."""


class ValidationError(MicropostError, ValueError):
    """Invalid input parameters or configuration."""


class NoStopband(MicropostError):
    """Spectrum contains no contiguous high-reflectance region."""


class NoDip(MicropostError):
    """Stopband contains no interior reflectance dip (no cavity resonance)."""


class ResolutionTooCoarse(MicropostError):
    """Grid spacing does not resolve the shortest intra-material wavelength."""


class NoDecayDetected(MicropostError):
    """Ringdown record shows no measurable energy decay."""


class FitDiverged(MicropostError):
    """Nonlinear least-squares fit failed to converge."""


class InsufficientSpan(MicropostError):
    """Fit data does not span enough of the model's natural scale."""


class InsufficientPeaks(MicropostError):
    """Too few side peaks available for the envelope fit."""


class NoPeak(MicropostError):
    """Histogram or spectrum lacks the expected dominant peak."""


class WindowExceedsPeriod(MicropostError):
    """Integration window is wider than the pulse period."""


class RangeExceeded(MicropostError):
    """Requested peak index falls outside the histogram range."""


class OutOfRange(MicropostError):
    """Query point outside the tabulated domain."""


class NonBracketing(MicropostError):
    """Calibration target is not bracketed by the search interval."""

"""Exception and warning types shared across the package."""


class PhysicsValidityError(ValueError):
    """Inputs are outside the validity domain of the requested model."""


class ConfigError(ValueError):
    """Malformed, incomplete, or contradictory experiment configuration."""


class StepSizeError(ValueError):
    """Integration step too coarse to resolve oscillation or damping."""


class NumericalError(RuntimeError):
    """NaN/overflow during integration or a failed numerical procedure."""


class FitError(NumericalError):
    """Spectral fit did not converge."""


class UnresolvedPeakError(FitError):
    """Spectrum lacks a resolvable resonance peak (peak/floor too small)."""


class RayleighValidityWarning(UserWarning):
    """Size parameter approaches the dipole-approximation boundary."""


class ShapeApproximationWarning(UserWarning):
    """Non-spherical particle treated through an equivalent-volume sphere."""


class KnudsenRegimeWarning(UserWarning):
    """Free-molecular drag formula used outside the ballistic regime."""

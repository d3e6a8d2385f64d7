"""Exception types raised across the package."""


class QubitBathError(Exception):
    """Base class for errors raised by this package."""


class DegenerateBathError(QubitBathError, ValueError):
    """The bath has no spectral width, so continuum quantities are undefined.

    A degenerate bath acts as a single collective oscillator: use the
    collective frequency (lambda0_of) and the cos^2 oscillation instead of
    a decay rate.
    """


class MemoryGuardError(QubitBathError, ValueError):
    """Dense internal-coupling matrix would exceed the configured size guard."""


class StabilityError(QubitBathError, ValueError):
    """Requested integrator step exceeds the RK4 stability bound."""


class NormDriftError(QubitBathError, RuntimeError):
    """State norm drifted far beyond tolerance mid-run; integration aborted."""


class ConfigError(QubitBathError, ValueError):
    """Malformed or inconsistent experiment configuration."""

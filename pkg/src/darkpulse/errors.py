"""Exception and warning types shared across the package."""


class DarkpulseError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateSpan(DarkpulseError):
    """The two target vectors do not span a two-dimensional subspace."""


class TraceMismatch(DarkpulseError):
    """A relaxation map received a state whose trace is not 1."""


class NegativeRadicand(DarkpulseError):
    """The overlap Tr{rho_a rho_b} exceeded 1 beyond numerical tolerance."""


class UnexpectedDimension(DarkpulseError):
    """The numerically detected null-space dimension is not the expected one."""


class SingularSystem(DarkpulseError):
    """The affine steady-state linear system has no solution matching the closed form."""


class UnstableSpectrum(DarkpulseError):
    """A generator eigenvalue has a positive real part beyond tolerance."""


class StepSizeUnderflow(DarkpulseError):
    """The adaptive step-size controller stalled during integration."""


class PositivityViolation(DarkpulseError):
    """An integrated snapshot developed an eigenvalue below the monitoring threshold."""


class ConfigError(DarkpulseError):
    """An experiment configuration failed validation; the message names the field."""


class AngleUnderdetermined(UserWarning):
    """Flag: a pure pi-polarized normal leaves phi and mu+- unobservable (set to 0)."""

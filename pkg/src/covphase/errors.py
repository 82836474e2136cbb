"""Exception types shared across the package.

Validation errors carry the measured violation magnitude so callers can
log how badly an invariant failed, not just that it failed.
"""


class CovphaseError(Exception):
    """Base class for all package errors."""


class ValidationError(CovphaseError):
    """A numerical invariant was violated by the given magnitude."""

    def __init__(self, message: str, magnitude: float = 0.0):
        super().__init__(f"{message} (violation {magnitude:.3e})")
        self.magnitude = magnitude


class NotHermitianError(ValidationError):
    pass


class NotUnitTraceError(ValidationError):
    pass


class NotPSDError(ValidationError):
    pass


class InconsistentPhasesError(CovphaseError):
    """Off-diagonal phases do not factorize into per-level phases."""

    def __init__(self, max_residual: float):
        super().__init__(
            f"phase cocycle check failed, max residual {max_residual:.3e} rad"
        )
        self.max_residual = max_residual


class WrongSpectrumKindError(CovphaseError):
    pass


class KTooLargeError(CovphaseError):
    pass


class GridTooCoarseError(CovphaseError):
    pass


class DimensionMismatchError(CovphaseError):
    pass


class NegativeWeightError(CovphaseError):
    pass


class NotCovariantFormError(CovphaseError):
    pass


class StepUnstableError(CovphaseError):
    """An integrator entry exceeded the stability bound."""

    def __init__(self, time: float, magnitude: float):
        super().__init__(
            f"integration unstable at t={time:.6g}, max entry {magnitude:.3e}"
        )
        self.time = time
        self.magnitude = magnitude


class TailOverflowError(CovphaseError):
    """Population leaked into the truncation edge beyond the tail budget."""

    def __init__(self, time: float, mass: float, budget: float):
        super().__init__(
            f"tail mass {mass:.3e} exceeded budget {budget:.3e} at t={time:.6g}"
        )
        self.time = time
        self.mass = mass
        self.budget = budget


class ConfigError(CovphaseError):
    """A config file could not be parsed or failed validation."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field '{field}'")
        suffix = f" ({', '.join(loc)})" if loc else ""
        super().__init__(message + suffix)
        self.line = line
        self.field = field

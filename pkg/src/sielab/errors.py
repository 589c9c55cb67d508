"""Exception hierarchy shared by all modules."""


class SieError(Exception):
    """Base class for library errors."""


class DomainError(SieError, ValueError):
    """An argument lies outside the supported domain of an operation."""


class ConfigurationError(SieError, ValueError):
    """Inconsistent problem setup (geometry, coefficients, wavenumber)."""


class MeshError(SieError, ValueError):
    """Structural problem with a mesh or a mesh file."""


class NumericError(SieError, ArithmeticError):
    """An iterative numerical procedure did not converge."""


class SolverError(SieError, RuntimeError):
    """Sparse factorisation or solve failed (numerically singular system)."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class ResonanceError(SolverError):
    """A per-mode matching system is singular (resonance of the radial problem)."""

    def __init__(self, message, mode=None):
        super().__init__(message, diagnostic=mode)
        self.mode = mode

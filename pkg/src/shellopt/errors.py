"""Exception types shared across the package."""


class ShellOptError(Exception):
    """Base class for all package errors."""


class DomainError(ShellOptError):
    """Parametric coordinate outside the valid knot range."""


class ContainmentError(ShellOptError):
    """Physical point outside an embedding box."""


class GeometryError(ShellOptError):
    """Invalid or degenerate geometric data."""


class ValidationError(ShellOptError):
    """Inconsistent user input (schemas, boundary specs, constraints)."""


class SolverError(ShellOptError):
    """Linear or nonlinear solve failure."""

"""Exception types shared across the toolkit."""


class MagnonLabError(Exception):
    """Base class for toolkit errors."""


class DomainError(MagnonLabError, ValueError):
    """An input lies outside the domain where a formula is defined."""


class DegenerateError(MagnonLabError, ValueError):
    """A denominator of the dispersive expansion vanishes (e.g. zero detuning)."""


class ConvergenceError(MagnonLabError, RuntimeError):
    """The optimizer could not evaluate the objective at any start point."""

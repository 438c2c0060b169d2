"""Exception types raised by the library."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class ConvergenceError(RuntimeError):
    """A numerical routine stopped before reaching its tolerance."""


class IntegrationError(ConvergenceError):
    """Quadrature hit its subdivision limit.

    Attributes:
        estimate: best integral estimate when the routine gave up.
        error: estimated absolute error of ``estimate``.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class RootFindingError(ConvergenceError):
    """Root finder ran out of iterations.

    Attributes:
        bracket: final ``(lo, hi)`` bracket, still containing a sign change.
        best: abscissa with the smallest residual seen.
    """

    def __init__(self, message: str, bracket: tuple[float, float], best: float):
        super().__init__(f"{message} (bracket={bracket!r}, best={best!r})")
        self.bracket = bracket
        self.best = best

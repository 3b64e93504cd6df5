"""Exception hierarchy.

The CLI maps these onto exit codes: ``InvariantError`` and its subclasses
exit 3, ``ConvergenceError`` exits 4.
"""


class QICError(Exception):
    """Base class for all errors raised by this package."""


class InvariantError(QICError, ValueError):
    """A value violates a domain invariant (trace, positivity, ...)."""

    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


class DimensionError(InvariantError):
    """Shapes or subsystem dimensions are inconsistent."""

    def __init__(self, message):
        super().__init__("dimension", message)


class NotHermitianError(InvariantError):
    def __init__(self, deviation, tol):
        self.deviation = deviation
        super().__init__(
            "hermitian", f"max |m - m^H| = {deviation:.3e} exceeds {tol:.0e}"
        )


class CompletenessError(InvariantError):
    """A would-be POVM does not resolve the identity."""

    def __init__(self, deficit, tol):
        self.deficit = deficit
        super().__init__(
            "completeness",
            f"||sum_a mu_a |a><a| - I|| = {deficit:.3e} exceeds {tol:.0e}",
        )


class ConvergenceError(QICError, ArithmeticError):
    """An iterative routine hit its iteration cap."""

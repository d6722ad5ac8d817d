"""Exception hierarchy shared by all modules."""


class ArakelovError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(ArakelovError, ValueError):
    """Malformed or out-of-domain input (bad coefficients, wrong degree, ...)."""


class NumericDegeneracyError(ArakelovError):
    """A matrix or configuration is too ill-conditioned to be trusted."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SingularCurveError(InvalidInputError):
    """The polynomial f has a repeated root."""


class PathRefinementError(ArakelovError):
    """An integration path passes too close to a branch point."""


class SingularChartError(ArakelovError):
    """Evaluation requested at a point where the chosen chart degenerates."""


class ProximityError(ArakelovError):
    """A point lies too close to a Weierstrass point for the regular formula."""


class ConvergenceError(ArakelovError):
    """An adaptive or extrapolation procedure failed to converge.

    ``diagnostics`` carries whatever the failing routine could report
    (worst panels, extrapolation tableau, ...).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else {}


class GenericityError(ArakelovError):
    """Random resampling did not produce a generic point configuration."""


class FamilyConditionError(ArakelovError):
    """An integer quintic violates the conditions of the genus-3 family."""

    def __init__(self, message, prime=None):
        super().__init__(message)
        self.prime = prime

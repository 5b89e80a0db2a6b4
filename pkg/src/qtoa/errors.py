"""Exception hierarchy shared by the numerical modules and the CLI."""


class QTOAError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(QTOAError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConfigError(QTOAError, ValueError):
    """Invalid run configuration or invalid object construction parameters."""


class NumericalError(QTOAError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


class SeriesDivergenceError(NumericalError):
    """A truncated series failed its convergence test."""


class HypergeometricError(NumericalError):
    def __init__(self, z, terms):
        self.z = z
        self.terms = terms
        super().__init__(f"0F1(;1;z) series did not converge within {terms} terms (|z|={abs(z):.6g})")


class QuadratureError(NumericalError):
    """Adaptive quadrature exhausted its subdivision budget.

    ``index`` identifies the integrand (position in the vectorized batch) and
    ``interval`` the worst unresolved subinterval.
    """

    def __init__(self, message, index=None, interval=None, error=None):
        self.index = index
        self.interval = interval
        self.error = error
        super().__init__(message)


class KernelOverflowError(NumericalError):
    def __init__(self, argument):
        self.argument = argument
        super().__init__(f"hyperbolic kernel argument too large to represent (|arg|={argument:.6g})")


class NormDriftError(NumericalError):
    """Wavefunction norm drifted beyond tolerance during propagation."""


class NoArrivalError(NumericalError):
    """No interior position-variance minimum in the recorded window."""

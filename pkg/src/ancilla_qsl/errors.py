"""Exception types raised across the package."""


class QslError(Exception):
    """Base class for all package errors."""


class NearDegenerateRoots(QslError):
    """Two roots of the system-only cubic coincide; the residue sum is singular."""


class StepSizeUnderflow(QslError):
    """The adaptive integrator could not meet its tolerance."""


class NormDrift(QslError):
    """A unitary propagation lost norm beyond tolerance."""


class DomainError(QslError, ValueError):
    """An argument lies outside its mathematical domain."""


class QuadratureFailure(QslError):
    """Rate quadrature did not converge under grid refinement."""


class Infeasible(QslError):
    """Zero evolution rate with a non-zero Bures distance (inconsistent trajectory)."""


class ToleranceExceeded(QslError):
    """Analytic and oracle dynamics disagree beyond the verification tolerance."""

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst

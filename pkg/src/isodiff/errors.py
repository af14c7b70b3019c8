"""Exception hierarchy shared by all modules."""


class IsodiffError(Exception):
    """Base class for library errors."""


class ValidationError(IsodiffError, ValueError):
    """Malformed or inconsistent input data."""


class LeadingCoefficientError(ValidationError):
    """The leading coefficient of a matrix polynomial is numerically singular."""


class BalanceError(ValidationError):
    """Integer shift data does not sum to zero."""


class UnsupportedConfigurationError(ValidationError):
    """The input lies outside the supported normal forms."""


class RootMismatchError(ValidationError):
    """A supplied value is not an eigenvalue of the polynomial."""


class GenericityError(IsodiffError):
    """A numerical proxy for a generic (Zariski-open) hypothesis failed.

    Parameters
    ----------
    message : str
        Description of the failed condition.
    lattice_point : tuple of int, optional
        Lattice point at which a flow aborted, when applicable.
    """

    def __init__(self, message, lattice_point=None):
        if lattice_point is not None:
            message = f"{message} (at lattice point {tuple(lattice_point)})"
        super().__init__(message)
        self.lattice_point = None if lattice_point is None else tuple(lattice_point)


class InconsistencyError(IsodiffError):
    """An internal consistency check (e.g. an exact division) failed."""


class IntegrationError(IsodiffError):
    """The ODE integrator rejected a step (pole proximity or drift)."""


class CongruenceError(ValidationError):
    """Two spectral values differ by a nonzero integer (or an integer power of q)."""

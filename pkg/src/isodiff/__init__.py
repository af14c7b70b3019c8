"""Isomonodromy transformations of linear difference systems.

Modules
-------
matpoly     matrix polynomials, right divisors, formal solutions at infinity
refactor    exchange of linear factors and twisted factor sequences
flows       elementary transformations, the lattice action and its flows
continuum   Schlesinger ODEs and the small-step limit of the lattice flows
cli         command-line front end
"""
from .config import DEFAULT, Tolerances
from .continuum import (
    ContinuousSystem,
    EmbeddingConfig,
    continuous_move,
    embed,
    integrate,
    limit_compare,
    schlesinger_rhs,
    transform_limit_check,
    unit_shift,
)
from .errors import (
    BalanceError,
    CongruenceError,
    GenericityError,
    InconsistencyError,
    IntegrationError,
    IsodiffError,
    LeadingCoefficientError,
    RootMismatchError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .flows import (
    DivisorState,
    FactorState,
    b_from_c,
    c_from_b,
    divisor_flow,
    factor_flow,
    schlesinger_action,
)
from .matpoly import (
    MatrixPolynomial,
    eigenvalues,
    formal_exponents,
    formal_series,
    from_right_divisors,
    right_divisor,
)
from .refactor import FactorSequence, Twist, permute_product, swap_adjacent

__version__ = "0.1.0"

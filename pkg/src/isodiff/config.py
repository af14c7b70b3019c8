"""Numerical tolerances, collected in a single record."""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Thresholds used as numerical proxies for exact conditions.

    Attributes
    ----------
    simple_root : float
        A root is simple when the second smallest singular value of A(a)
        exceeds ``simple_root`` times the largest one.
    root_residual : float
        Relative smallest singular value above which a point is not a root.
    max_condition : float
        Largest admissible condition number of an eigenvector matrix.
    congruence : float
        Absolute tolerance for "differs by a nonzero integer".
    match_ambiguity : float
        Two candidate eigenvalues closer than this make matching ambiguous.
    sylvester_condition : float
        Largest admissible condition number of the Sylvester solution.
    leading_condition : float
        Largest admissible condition number of the leading coefficient.
    pivot : float
        Smallest admissible modulus of a pivot coordinate of a unit vector.
    remainder : float
        Relative size of a division remainder that is treated as zero.
    diagonal : float
        Relative size of off-diagonal entries treated as zero.
    """

    simple_root: float = 1e-6
    root_residual: float = 1e-7
    max_condition: float = 1e8
    congruence: float = 1e-8
    match_ambiguity: float = 1e-6
    sylvester_condition: float = 1e10
    leading_condition: float = 1e12
    pivot: float = 1e-10
    remainder: float = 1e-7
    diagonal: float = 1e-12

    def updated(self, **changes):
        return replace(self, **changes)


DEFAULT = Tolerances()

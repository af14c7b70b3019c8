"""Reproducible random generic instances."""
from __future__ import annotations

import numpy as np

from .config import DEFAULT, Tolerances
from .continuum import ContinuousSystem
from .errors import CongruenceError, ValidationError
from .flows import DivisorState
from .matpoly import check_noncongruent, congruence_defect
from .refactor import Twist

MARGIN = 0.1


def unit_square(rng, shape):
    """Entries uniform in the complex square [-1, 1] + i [-1, 1]."""
    return rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)


def _min_defect(values, q=None):
    values = np.ravel(values)
    return min((congruence_defect(a, b, q) for i, a in enumerate(values) for b in values[i + 1:]),
               default=np.inf)


def random_leading(rng, m, ratio_margin=0.2):
    """Diagonal A0 whose entries have pairwise non-real ratios."""
    for _ in range(1000):
        rho = np.exp(2j * np.pi * rng.uniform(size=m)) * rng.uniform(0.5, 2.0, m)
        ratios = [rho[i] / rho[j] for i in range(m) for j in range(i)]
        if all(abs(np.angle(r)) > ratio_margin and abs(abs(np.angle(r)) - np.pi) > ratio_margin
               for r in ratios):
            return np.diag(rho)
    raise ValidationError("could not draw a generic leading coefficient")


def random_divisors(rng, m, n, twist: Twist = Twist(), margin=MARGIN):
    """Divisors with uniform entries, each shifted by a scalar until all
    eigenvalues are pairwise non-congruent with the given margin."""
    q = twist.congruence_q
    B, groups = [], []
    for _ in range(n):
        for _ in range(1000):
            X = unit_square(rng, (m, m))
            if twist.kind == "q":
                X = X + 2.0 * np.eye(m)     # keep the spectrum away from 0
            vals = np.linalg.eigvals(X)
            if _min_defect(vals, q) < margin:
                continue
            if groups and _min_defect(np.concatenate(groups + [vals]), q) < margin:
                c = unit_square(rng, ())
                X = X + c * np.eye(m)
                vals = vals + c
                if _min_defect(np.concatenate(groups + [vals]), q) < margin:
                    continue
            B.append(X)
            groups.append(np.linalg.eigvals(X))
            break
        else:
            raise CongruenceError("could not draw non-congruent divisor spectra")
    return np.array(B), np.array(groups)


def random_state(seed, m, n, twist: Twist = Twist(), tol: Tolerances = DEFAULT) -> DivisorState:
    """Random generic divisor state for the given variant."""
    rng = np.random.default_rng(seed)
    A0 = random_leading(rng, m)
    if twist.kind == "autonomous":
        # unit-modulus eigenvalues make the twist an isometry; otherwise the
        # factors grow like |rho_i / rho_j|^k along the diagonal
        A0 = A0 / np.abs(np.diag(A0))
    B, groups = random_divisors(rng, m, n, twist)
    check_noncongruent(groups, tol, twist.congruence_q)
    return DivisorState(A0, B, groups, twist=twist)


def random_continuous(seed, m, n, separation=0.75, margin=MARGIN, with_infinity=True) -> ContinuousSystem:
    """Random continuous system with well separated poles.

    Residue entries and poles are uniform in the complex unit square; poles
    are resampled until pairwise at least ``separation`` apart, and residues
    until their eigenvalues are non-congruent within each residue.
    """
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        x = unit_square(rng, n)
        if min((abs(x[i] - x[j]) for i in range(n) for j in range(i)), default=np.inf) >= separation:
            break
    else:
        raise ValidationError("could not place separated poles")
    B = []
    for _ in range(n):
        for _ in range(1000):
            X = unit_square(rng, (m, m))
            if _min_defect(np.linalg.eigvals(X)) >= margin:
                B.append(X)
                break
        else:
            raise CongruenceError("could not draw a non-resonant residue")
    Binf = None
    if with_infinity:
        for _ in range(1000):
            s = unit_square(rng, m)
            if min((abs(s[i] - s[j]) for i in range(m) for j in range(i)), default=np.inf) >= margin:
                Binf = np.diag(s)
                break
    return ContinuousSystem(x, np.array(B), Binf)

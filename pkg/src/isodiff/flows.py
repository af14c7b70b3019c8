"""Isomonodromy transformations and the lattice Schlesinger flows.

Elementary multipliers shift one root of det A(z) and one exponent (or two
roots, or two exponents) by one unit.  Compositions realize the full
integer action on (roots, exponents); the subgroup that shifts whole
eigenvalue groups is run directly on right divisors (``divisor_flow``) or on
ordered factors (``factor_flow``).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    BalanceError,
    GenericityError,
    InconsistencyError,
    IsodiffError,
    ValidationError,
)
from .matpoly import (
    MatrixPolynomial,
    as_matrix,
    default_groups,
    divide_by_roots,
    eigenvalues,
    factor_from_left,
    formal_exponents,
    formal_series,
    from_right_divisors,
    left_eigenvector,
    match_spectrum,
    pencil_eigenvector,
    product,
    sort_values,
)
from .refactor import FactorSequence, Twist, apply_flows, product_residual, swap_adjacent


# ---------------------------------------------------------------------------
# multipliers

@dataclass(frozen=True, eq=False)
class Multiplier:
    """Rational matrix R(z) = num(z) / den(z) together with its inverse.

    Denominators are monic scalar polynomials stored by their roots.
    ``det_zeros`` and ``det_poles`` record det R(z) = prod(z - zeros) /
    prod(z - poles) as predicted by the closed form of the move.
    """

    kind: str
    num: MatrixPolynomial
    den: tuple = ()
    inv_num: MatrixPolynomial = None
    inv_den: tuple = ()
    det_zeros: tuple = ()
    det_poles: tuple = ()
    data: dict = field(default_factory=dict)

    def __call__(self, z) -> np.ndarray:
        return self.num(z) / np.prod([z - r for r in self.den])

    def inverse(self, z) -> np.ndarray:
        return self.inv_num(z) / np.prod([z - r for r in self.inv_den])

    def det_formula(self, z) -> complex:
        return complex(np.prod([z - r for r in self.det_zeros]) /
                       np.prod([z - r for r in self.det_poles]))

    def then(self, other: "Multiplier") -> "Multiplier":
        """Composition: apply ``self`` first, then ``other`` (R = R_other R_self)."""
        return Multiplier(
            kind="composite",
            num=other.num @ self.num,
            den=tuple(other.den) + tuple(self.den),
            inv_num=self.inv_num @ other.inv_num,
            inv_den=tuple(self.inv_den) + tuple(other.inv_den),
            det_zeros=tuple(other.det_zeros) + tuple(self.det_zeros),
            det_poles=tuple(other.det_poles) + tuple(self.det_poles),
        )

    def inverse_residual(self, points) -> float:
        I = np.eye(self.num.m)
        return float(max(np.linalg.norm(self(z) @ self.inverse(z) - I) for z in points))

    def det_residual(self, points) -> float:
        return float(max(abs(np.linalg.det(self(z)) - self.det_formula(z)) /
                         max(1.0, abs(self.det_formula(z))) for z in points))

    def reduced(self, tol=1e-9) -> "Multiplier":
        """Cancel denominator roots that divide the numerator and trim the degree."""
        num, den = self.num, list(self.den)
        for r in list(den):
            try:
                num = divide_by_roots(num, [r], tol)
                den.remove(r)
            except InconsistencyError:
                pass
        inv, iden = self.inv_num, list(self.inv_den)
        for r in list(iden):
            try:
                inv = divide_by_roots(inv, [r], tol)
                iden.remove(r)
            except InconsistencyError:
                pass
        return replace(self, num=num.trimmed(tol), den=tuple(den),
                       inv_num=inv.trimmed(tol), inv_den=tuple(iden))


def apply_multiplier(A: MatrixPolynomial, R: Multiplier, tol: Tolerances = DEFAULT) -> MatrixPolynomial:
    """Compute R(z + 1) A(z) R^{-1}(z), which must be a polynomial of degree n."""
    P = R.num.shift(1.0) @ A @ R.inv_num
    roots = [r - 1.0 for r in R.den] + list(R.inv_den)
    P = divide_by_roots(P, roots, tol.remainder)
    extra = P.n - A.n
    if extra < 0:
        raise InconsistencyError("transformed polynomial lost degree")
    if extra:
        head = np.linalg.norm(P.coeffs[:extra].ravel())
        if head > tol.remainder * P.norm():
            raise InconsistencyError(f"transformed polynomial has degree above n (relative {head / P.norm():.2e})")
        P = MatrixPolynomial(P.coeffs[extra:])
    # the leading coefficient is preserved exactly; check, then restore it
    dev = np.linalg.norm(P.coeffs[0] - A.leading)
    if dev > tol.remainder * max(P.norm(), 1.0):
        raise InconsistencyError(f"leading coefficient changed (relative {dev / P.norm():.2e})")
    coeffs = P.coeffs.copy()
    coeffs[0] = A.leading
    return MatrixPolynomial(coeffs)


def _unit(m, i):
    E = np.zeros((m, m), dtype=complex)
    E[i, i] = 1.0
    return E


def _multiplier_blocks(v, Q, i):
    """The constant blocks (R0, R1) of the degree-one multiplier E_i (z - a) + R0."""
    m = len(v)
    R0 = np.eye(m, dtype=complex)
    R0[i, i] = sum(Q[i, s] * v[s] for s in range(m) if s != i) / v[i]
    for l in range(m):
        if l != i:
            R0[i, l] = -Q[i, l]
            R0[l, i] = -v[l] / v[i]
    row = Q[i].astype(complex).copy()
    row[i] = 1.0
    R1 = np.outer(v, row) / v[i]
    return R0, R1


def _pivot(value, scale, tol, what):
    if abs(value) <= tol.pivot * max(1.0, scale):
        raise GenericityError(f"{what} vanishes (|value| = {abs(value):.2e})")


def _check_row(A, i):
    if not 0 <= i < A.m:
        raise ValidationError(f"row index {i} out of range for m={A.m}")


def down_multiplier(A: MatrixPolynomial, a, i: int, tol: Tolerances = DEFAULT, Y1=None) -> Multiplier:
    """Multiplier moving the root a to a - 1 and the exponent d_i to d_i + 1."""
    _check_row(A, i)
    v = pencil_eigenvector(A, a, tol)
    _pivot(v[i], 1.0, tol, f"eigenvector coordinate {i}")
    Q = formal_series(A, 1, tol=tol).Yhat[0] if Y1 is None else Y1
    R0, R1 = _multiplier_blocks(v, Q, i)
    m = A.m
    E = _unit(m, i)
    I = np.eye(m)
    return Multiplier(
        kind="elementary-down",
        num=MatrixPolynomial(np.stack([E, R0 - a * E])),
        inv_num=MatrixPolynomial(np.stack([I - E, R1 - a * (I - E)])),
        inv_den=(complex(a),),
        det_zeros=(complex(a),),
        data={"a": complex(a), "i": i, "v": v, "R0": R0, "R1": R1},
    )


def up_multiplier(A: MatrixPolynomial, a, i: int, tol: Tolerances = DEFAULT, Y1=None) -> Multiplier:
    """Multiplier moving the root a to a + 1 and the exponent d_i to d_i - 1."""
    _check_row(A, i)
    w = left_eigenvector(A, a, tol)
    _pivot(w[i], 1.0, tol, f"left kernel coordinate {i}")
    Q = -(formal_series(A, 1, tol=tol).Yhat[0] if Y1 is None else Y1).T
    R0, R1 = _multiplier_blocks(w, Q, i)
    m = A.m
    E = _unit(m, i)
    I = np.eye(m)
    b = complex(a) + 1.0
    return Multiplier(
        kind="elementary-up",
        num=MatrixPolynomial(np.stack([I - E, R1.T - b * (I - E)])),
        den=(b,),
        inv_num=MatrixPolynomial(np.stack([E, R0.T - b * E])),
        det_poles=(b,),
        data={"a": complex(a), "i": i, "w": w, "R0": R0.T, "R1": R1.T},
    )


def pair_roots_multiplier(A: MatrixPolynomial, a_down, a_up, tol: Tolerances = DEFAULT) -> Multiplier:
    """Multiplier moving a_down to a_down - 1 and a_up to a_up + 1, exponents fixed."""
    v = pencil_eigenvector(A, a_down, tol)
    w = left_eigenvector(A, a_up, tol)
    vw = v @ w
    _pivot(vw, 1.0, tol, "pairing v^t w")
    a_down, a_up = complex(a_down), complex(a_up)
    R0 = (a_up - a_down + 1.0) / vw * np.outer(v, w)
    I = np.eye(A.m)
    return Multiplier(
        kind="paired-roots",
        num=MatrixPolynomial(np.stack([I, R0 - (a_up + 1.0) * I])),
        den=(a_up + 1.0,),
        inv_num=MatrixPolynomial(np.stack([I, -R0 - a_down * I])),
        inv_den=(a_down,),
        det_zeros=(a_down,),
        det_poles=(a_up + 1.0,),
        data={"a_down": a_down, "a_up": a_up, "R0": R0, "v": v, "w": w},
    )


def pair_exponents_multiplier(A: MatrixPolynomial, i: int, j: int, tol: Tolerances = DEFAULT,
                              series=None) -> Multiplier:
    """Multiplier raising d_i by one and lowering d_j by one, roots fixed."""
    _check_row(A, i)
    _check_row(A, j)
    if i == j:
        raise ValidationError("pair_exponents needs two different indices")
    Y = formal_series(A, 2, tol=tol).Yhat if series is None else series
    y1, y2 = Y[0], Y[1]
    _pivot(y1[i, j], np.linalg.norm(y1), tol, f"series entry ({i}, {j})")
    m = A.m
    c = y1[i, j]
    R0 = np.zeros((m, m), dtype=complex)
    Ri = np.zeros((m, m), dtype=complex)
    for k in range(m):
        for l in range(m):
            if k == i:
                if l == i:
                    R0[k, l] = (-y2[i, j] + sum(y1[i, s] * y1[s, j] for s in range(m) if s != i)) / c
                else:
                    R0[k, l] = -y1[i, l]
                Ri[k, l] = c if l == j else 0.0
            elif k == j:
                R0[k, l] = 1.0 / c if l == i else 0.0
                if l == i:
                    Ri[k, l] = -1.0 / c
                elif l == j:
                    Ri[k, l] = -y2[i, j] / c + y1[j, j]
                else:
                    Ri[k, l] = -y1[i, l] / c
            else:
                if l == i:
                    R0[k, l] = -y1[k, j] / c
                elif l == j:
                    Ri[k, l] = y1[k, j]
                else:
                    R0[k, l] = Ri[k, l] = float(k == l)
    return Multiplier(
        kind="paired-exponents",
        num=MatrixPolynomial(np.stack([_unit(m, i), R0])),
        inv_num=MatrixPolynomial(np.stack([_unit(m, j), Ri])),
        data={"i": i, "j": j, "R0": R0, "R0_inv": Ri},
    )


def elementary_down(A, a, i, tol: Tolerances = DEFAULT):
    """Root a -> a - 1, exponent d_i -> d_i + 1.  Returns (multiplier, new A)."""
    R = down_multiplier(A, a, i, tol)
    return R, apply_multiplier(A, R, tol)


def elementary_up(A, a, i, tol: Tolerances = DEFAULT):
    """Root a -> a + 1, exponent d_i -> d_i - 1.  Returns (multiplier, new A)."""
    R = up_multiplier(A, a, i, tol)
    return R, apply_multiplier(A, R, tol)


def elementary_pair_roots(A, a_down, a_up, tol: Tolerances = DEFAULT):
    """Roots a_down -> a_down - 1 and a_up -> a_up + 1.  Returns (multiplier, new A)."""
    R = pair_roots_multiplier(A, a_down, a_up, tol)
    return R, apply_multiplier(A, R, tol)


def elementary_pair_exponents(A, i_up, j_down, tol: Tolerances = DEFAULT):
    """Exponents d_i -> d_i + 1 and d_j -> d_j - 1.  Returns (multiplier, new A)."""
    R = pair_exponents_multiplier(A, i_up, j_down, tol)
    return R, apply_multiplier(A, R, tol)


# ---------------------------------------------------------------------------
# the full integer action

@dataclass(frozen=True, eq=False)
class TransformResult:
    """Outcome of ``schlesinger_action``.

    ``roots`` are the tracked roots (input roots shifted by kappa exactly),
    ``moves`` the elementary moves applied, ``multiplier`` the composed
    multiplier (None unless requested).
    """

    A: MatrixPolynomial
    roots: np.ndarray
    moves: list
    multiplier: Multiplier | None = None


def _round_robin(counts):
    rem = [int(c) for c in counts]
    out = []
    while any(rem):
        for i, c in enumerate(rem):
            if c:
                out.append(i)
                rem[i] -= 1
    return out


def plan_moves(kappa, delta, rng=None):
    """Decompose (kappa, delta) into elementary moves.

    Root decrements are paired with exponent increments (``down``), root
    increments with exponent decrements (``up``); leftovers are paired
    root-with-root or exponent-with-exponent.  With ``rng`` the pairing and
    the order of moves are shuffled.
    """
    kappa = np.asarray(kappa, dtype=int)
    delta = np.asarray(delta, dtype=int)
    if kappa.sum() + delta.sum() != 0:
        raise BalanceError(f"sum(kappa) + sum(delta) = {kappa.sum() + delta.sum()}, expected 0")
    downs = [r for r in range(len(kappa)) for _ in range(max(0, -kappa[r]))]
    ups = [r for r in range(len(kappa)) for _ in range(max(0, kappa[r]))]
    plus = _round_robin(np.maximum(delta, 0))
    minus = _round_robin(np.maximum(-delta, 0))
    if rng is not None:
        for lst in (downs, ups, plus, minus):
            rng.shuffle(lst)
    moves = []
    while downs and plus:
        moves.append(("down", downs.pop(0), plus.pop(0)))
    while ups and minus:
        moves.append(("up", ups.pop(0), minus.pop(0)))
    while downs and ups:
        moves.append(("pair_roots", downs.pop(0), ups.pop(0)))
    while plus and minus:
        moves.append(("pair_exponents", plus.pop(0), minus.pop(0)))
    assert not (downs or ups or plus or minus)
    if rng is not None:
        order = rng.permutation(len(moves))
        moves = [moves[k] for k in order]
    return moves


def schlesinger_action(A: MatrixPolynomial, kappa, delta, roots=None, seed=None,
                       with_multiplier=False, tol: Tolerances = DEFAULT) -> TransformResult:
    """Shift the roots of det A(z) by kappa and the exponents by delta.

    Parameters
    ----------
    A : MatrixPolynomial with diagonal leading coefficient
    kappa : mn integers aligned with ``roots``
    delta : m integers
    roots : the mn roots of det A(z); default sorted by real then imaginary part
    seed : optional seed to shuffle the elementary decomposition
    with_multiplier : also return the composed multiplier

    Raises BalanceError if sum(kappa) + sum(delta) != 0 and GenericityError
    (with the move index) if an elementary move is not defined.
    """
    if roots is None:
        roots = sort_values(eigenvalues(A, tol))
    roots = np.array(roots, dtype=complex).ravel()
    kappa = np.asarray(kappa, dtype=int).ravel()
    delta = np.asarray(delta, dtype=int).ravel()
    if len(kappa) != len(roots) or len(delta) != A.m:
        raise ValidationError(f"kappa needs {len(roots)} entries and delta {A.m}")
    rng = None if seed is None else np.random.default_rng(seed)
    moves = plan_moves(kappa, delta, rng)
    cur = roots.copy()
    total = None
    for idx, (kind, x, y) in enumerate(moves):
        try:
            if kind == "down":
                R = down_multiplier(A, cur[x], y, tol)
                cur[x] -= 1
            elif kind == "up":
                R = up_multiplier(A, cur[x], y, tol)
                cur[x] += 1
            elif kind == "pair_roots":
                R = pair_roots_multiplier(A, cur[x], cur[y], tol)
                cur[x] -= 1
                cur[y] += 1
            else:
                R = pair_exponents_multiplier(A, x, y, tol)
            A = apply_multiplier(A, R, tol)
        except IsodiffError as exc:
            raise type(exc)(f"elementary move {idx} ({kind}): {exc}") from exc
        if with_multiplier:
            total = R if total is None else total.then(R)
    if with_multiplier and total is None:
        I = np.eye(A.m)
        total = Multiplier("identity", MatrixPolynomial(I[None]), inv_num=MatrixPolynomial(I[None]))
    return TransformResult(A=A, roots=cur, moves=moves, multiplier=total)


def group_shift_kappa(roots, groups, shifts):
    """kappa aligned with ``roots`` for whole-group shifts: roots of group i move by -shifts[i]."""
    roots = np.asarray(roots, dtype=complex).ravel()
    kappa = np.zeros(len(roots), dtype=int)
    for g, s in zip(np.asarray(groups, dtype=complex), shifts):
        for a in g:
            kappa[int(np.argmin(np.abs(roots - a)))] = -int(s)
    return kappa


# ---------------------------------------------------------------------------
# divisor coordinates

def _as_point(k, n):
    k = tuple(int(x) for x in np.asarray(k).ravel())
    if len(k) != n:
        raise ValidationError(f"lattice point must have {n} coordinates, got {len(k)}")
    return k


@dataclass(frozen=True, eq=False)
class DivisorState:
    """Right divisors B_i(k) of the transformed polynomial at lattice point k.

    ``groups`` are the base spectra at k = 0; the spectrum of B_i(k) is
    ``twist.shift_values(groups[i], k[i])``.
    """

    A0: np.ndarray
    B: np.ndarray
    groups: np.ndarray
    k: tuple = None
    twist: Twist = field(default_factory=Twist)

    def __post_init__(self):
        B = np.array([as_matrix(X) for X in self.B])
        object.__setattr__(self, "A0", as_matrix(self.A0, "A0"))
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "groups", np.asarray(self.groups, dtype=complex).reshape(B.shape[0], B.shape[1]))
        object.__setattr__(self, "k", (0,) * B.shape[0] if self.k is None else _as_point(self.k, B.shape[0]))

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def spectra(self) -> np.ndarray:
        """Expected spectra of the current divisors (exact bookkeeping)."""
        return np.array([self.twist.shift_values(g, s) for g, s in zip(self.groups, self.k)])

    def polynomial(self, tol: Tolerances = DEFAULT) -> MatrixPolynomial:
        return from_right_divisors(self.A0, list(self.B), self.spectra(), tol)

    @classmethod
    def from_polynomial(cls, A: MatrixPolynomial, groups=None, twist=None, tol: Tolerances = DEFAULT):
        from .matpoly import right_divisor
        groups = default_groups(A, tol) if groups is None else np.asarray(groups, dtype=complex)
        B = [right_divisor(A, g, tol) for g in groups]
        return cls(A.leading, B, groups, twist=twist or Twist())


def spectrum_error(B, expected) -> float:
    """Largest distance between eigenvalues of B and the expected values after matching."""
    _, err = match_spectrum(np.linalg.eigvals(B), expected)
    return err


class _Stepper:
    """Closed-form forward steps from one lattice point (memoized family)."""

    def __init__(self, B, tol):
        self.B = B
        self.tol = tol
        self.n = len(B)
        self._family = lru_cache(maxsize=None)(self._family_uncached)

    def closed_form(self, Y, T):
        E = Y - T
        c = np.linalg.cond(E)
        if not np.isfinite(c) or c > self.tol.max_condition:
            raise GenericityError(f"divisor difference is singular (cond {c:.2e})")
        return E @ T @ np.linalg.inv(E)

    def _family_uncached(self, i, eps):
        """B_i(p + eps) for eps in {0,1}^n with eps_i = 0."""
        ones = [j for j, e in enumerate(eps) if e]
        if not ones:
            return self.B[i]
        j = ones[-1]
        prev = tuple(0 if t == j else e for t, e in enumerate(eps))
        return self.closed_form(self.family(j, prev), self.family(i, prev))

    def family(self, i, eps):
        return self._family(i, tuple(eps))


def _forward_step(state: DivisorState, j: int, tol: Tolerances) -> DivisorState:
    """B(p) -> B(p + e_j)."""
    n = state.n
    st = _Stepper(state.B, tol)
    out = np.empty_like(state.B)
    e_j = tuple(int(t == j) for t in range(n))
    for i in range(n):
        if i != j:
            out[i] = st.family(i, e_j)
    # walk from p + (1..1) down to p + e_j, removing one coordinate at a time
    X = state.twist.diagonal(state.B[j], state.A0, 1)
    eps = [1] * n
    for l in range(n):
        if l == j:
            continue
        eps_l = eps.copy()
        eps_l[l] = 0
        Y = st.family(l, tuple(eps_l))
        _, X = swap_adjacent(X, Y, tol)
        eps = eps_l
    out[j] = X
    k = list(state.k)
    k[j] += 1
    return replace(state, B=out, k=tuple(k))


def _diagonal_step(state: DivisorState, steps: int) -> DivisorState:
    B = np.array([state.twist.diagonal(X, state.A0, steps) for X in state.B])
    return replace(state, B=B, k=tuple(x + steps for x in state.k))


def divisor_path(state: DivisorState, target, tol: Tolerances = DEFAULT, check=True):
    """States visited on the way to ``target`` (diagonal moves, then single steps)."""
    target = _as_point(target, state.n)
    d = np.subtract(target, state.k)
    if not d.any():
        return [state]
    c = int(d.min())
    path = [state]
    try:
        for _ in range(abs(c)):
            state = _diagonal_step(state, int(np.sign(c)))
            path.append(state)
        for j in range(state.n):
            for _ in range(int(d[j] - c)):
                state = _forward_step(state, j, tol)
                if check:
                    _check_spectra(state)
                path.append(state)
    except GenericityError as exc:
        raise GenericityError(str(exc), lattice_point=state.k) from exc
    return path


def _check_spectra(state: DivisorState, limit=1e-6):
    for i, (X, g) in enumerate(zip(state.B, state.spectra())):
        err = spectrum_error(X, g)
        if err > limit * (1.0 + np.max(np.abs(g))):
            raise GenericityError(f"spectrum of divisor {i} drifted by {err:.2e}", lattice_point=state.k)


def divisor_flow(state: DivisorState, target, tol: Tolerances = DEFAULT, check=True) -> DivisorState:
    """Divisors B_i(target) by the diagonal-then-single-step schedule.

    Moves by c = min(target - k) along the diagonal, then takes single
    forward steps in index order.  Each forward step uses closed-form
    conjugations for the unshifted divisors and adjacent exchanges for the
    shifted one.  A GenericityError carries the lattice point where it
    occurred.
    """
    return divisor_path(state, target, tol, check)[-1]


def lattice_box(state: DivisorState, radius: int, tol: Tolerances = DEFAULT) -> dict:
    """All states with |k - k0|_inf <= radius, each computed from ``state``."""
    import itertools
    out = {}
    for off in itertools.product(range(-radius, radius + 1), repeat=state.n):
        k = tuple(a + b for a, b in zip(state.k, off))
        out[k] = divisor_flow(state, k, tol)
    return out


# ---------------------------------------------------------------------------
# factor coordinates

@dataclass(frozen=True, eq=False)
class FactorState:
    """Ordered factors: the transformed polynomial is A0 (z - C_1(l)) ... (z - C_n(l))."""

    A0: np.ndarray
    C: np.ndarray
    groups: np.ndarray
    l: tuple = None
    twist: Twist = field(default_factory=Twist)

    def __post_init__(self):
        C = np.array([as_matrix(X) for X in self.C])
        object.__setattr__(self, "A0", as_matrix(self.A0, "A0"))
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "groups", np.asarray(self.groups, dtype=complex).reshape(C.shape[0], C.shape[1]))
        object.__setattr__(self, "l", (0,) * C.shape[0] if self.l is None else _as_point(self.l, C.shape[0]))

    @property
    def n(self):
        return self.C.shape[0]

    @property
    def m(self):
        return self.C.shape[1]

    def sequence(self) -> FactorSequence:
        return FactorSequence(self.C, self.A0, self.twist)

    def spectra(self) -> np.ndarray:
        return np.array([self.twist.shift_values(g, s) for g, s in zip(self.groups, self.l)])

    def polynomial(self) -> MatrixPolynomial:
        return product(list(self.C), self.A0)

    @classmethod
    def from_polynomial(cls, A: MatrixPolynomial, groups=None, twist=None, tol: Tolerances = DEFAULT):
        """Factor A = A0 (z - C_1) ... (z - C_n) with Sp(C_i) = groups[i]."""
        groups = default_groups(A, tol) if groups is None else np.asarray(groups, dtype=complex)
        return cls(A.leading, factor_from_left(A, groups, tol), groups, twist=twist or Twist())


def factor_flow(state: FactorState, target, tol: Tolerances = DEFAULT) -> FactorState:
    """Factors C_i(target) by applying the sequence flows F_j^(target_j - l_j)."""
    target = _as_point(target, state.n)
    d = np.subtract(target, state.l)
    try:
        seq = apply_flows(state.sequence(), d, tol)
    except GenericityError as exc:
        raise GenericityError(str(exc), lattice_point=target) from exc
    return replace(state, C=seq.base, l=target)


def factor_path(state: FactorState, target, tol: Tolerances = DEFAULT):
    """States visited by unit flows in index order."""
    target = _as_point(target, state.n)
    path = [state]
    for j in range(state.n):
        d = target[j] - state.l[j]
        for _ in range(abs(d)):
            l = list(state.l)
            l[j] += int(np.sign(d))
            state = factor_flow(state, l, tol)
            path.append(state)
    return path


def b_from_c(state: FactorState, k, tol: Tolerances = DEFAULT) -> DivisorState:
    """B_i(k) = C_i(k_1, .., k_i, k_{i+1} - 1, .., k_n - 1)."""
    k = _as_point(k, state.n)
    B = []
    for i in range(state.n):
        l = [k[t] if t <= i else k[t] - 1 for t in range(state.n)]
        B.append(factor_flow(state, l, tol).C[i])
    return DivisorState(state.A0, B, state.groups, k, state.twist)


def c_from_b(state: DivisorState, l, tol: Tolerances = DEFAULT) -> FactorState:
    """C_i(l) = B_i(l_1, .., l_i, l_{i+1} + 1, .., l_n + 1)."""
    l = _as_point(l, state.n)
    C = []
    for i in range(state.n):
        k = [l[t] if t <= i else l[t] + 1 for t in range(state.n)]
        C.append(divisor_flow(state, k, tol).B[i])
    return FactorState(state.A0, C, state.groups, l, state.twist)


# ---------------------------------------------------------------------------
# residual checks

def _rel(x, scale):
    return float(np.linalg.norm(x) / max(scale, 1.0))


def check_residuals(states: dict, A0=None, twist=None, polynomial_steps=False,
                    tol: Tolerances = DEFAULT) -> dict:
    """Residuals of the lattice equations over a set of divisor states.

    ``states`` maps lattice points to DivisorState values from one
    trajectory.  For every pair of adjacent points present the report holds
    the worst normalized residual of

    * ``additive``: B_i(k) - B_i(k + e_j) = B_j(k) - B_j(k + e_i)
    * ``multiplicative``: B_j(k + e_i) B_i(k) = B_i(k + e_j) B_j(k)
    * ``product``: the two factorizations of the quadratic agree at samples
    * ``diagonal``: the all-ones shift equals the twisted conjugation
    * ``spectra``: eigenvalues of B_i(k) against the exact bookkeeping
    * ``polynomial_step`` (difference variant, optional): the transformed
      polynomial equals (z + 1 - B_i) A(z) (z - B_i)^{-1}

    Values are 0.0 when a check is vacuous (e.g. n = 1 for the pairwise
    equations).
    """
    rep = {"additive": 0.0, "multiplicative": 0.0, "product": 0.0, "diagonal": 0.0, "spectra": 0.0}
    if not states:
        return rep
    first = next(iter(states.values()))
    A0 = first.A0 if A0 is None else A0
    twist = first.twist if twist is None else twist
    n = first.n
    polys = {}
    if polynomial_steps:
        rep["polynomial_step"] = 0.0
    for k, s in states.items():
        for i in range(n):
            g = s.spectra()[i]
            rep["spectra"] = max(rep["spectra"], spectrum_error(s.B[i], g) / (1.0 + np.max(np.abs(g))))
        ones = tuple(x + 1 for x in k)
        if ones in states:
            for i in range(n):
                pred = twist.diagonal(s.B[i], A0, 1)
                rep["diagonal"] = max(rep["diagonal"], _rel(states[ones].B[i] - pred, 1 + np.linalg.norm(pred)))
        for i in range(n):
            ki = tuple(x + (t == i) for t, x in enumerate(k))
            if polynomial_steps and ki in states:
                for key in (k, ki):
                    if key not in polys:
                        polys[key] = states[key].polynomial(tol)
                P0, P1 = polys[k], polys[ki]
                Bi = s.B[i]
                lhs = P1 @ MatrixPolynomial.linear(Bi)
                rhs = MatrixPolynomial.linear(Bi - np.eye(s.m)) @ P0
                rep["polynomial_step"] = max(rep["polynomial_step"], (lhs - rhs).norm() / max(lhs.norm(), 1.0))
            for j in range(i + 1, n):
                kj = tuple(x + (t == j) for t, x in enumerate(k))
                if ki not in states or kj not in states:
                    continue
                Bi, Bj = s.B[i], s.B[j]
                Bi_j, Bj_i = states[kj].B[i], states[ki].B[j]
                scale = 1.0 + max(np.linalg.norm(M) for M in (Bi, Bj, Bi_j, Bj_i))
                rep["additive"] = max(rep["additive"], _rel(Bi - Bi_j - (Bj - Bj_i), scale))
                rep["multiplicative"] = max(rep["multiplicative"], _rel(Bj_i @ Bi - Bi_j @ Bj, scale ** 2))
                rep["product"] = max(rep["product"], product_residual([Bi_j, Bj], [Bj_i, Bi]))
    return rep


def check_factor_residuals(states: dict, tol: Tolerances = DEFAULT) -> dict:
    """Residuals of the factor-coordinate lattice equations.

    ``exchange``: for adjacent l, l + e_i the products
    (z - s C_i) .. (z - s C_n) A0 (z - C_1) .. (z - C_{i-1}) agree with the
    shifted counterpart, where s(C) is C - I, C / q or C for the three
    variants.  ``diagonal``: the all-ones shift rule.  ``spectra``: as for
    divisor states.
    """
    rep = {"exchange": 0.0, "diagonal": 0.0, "spectra": 0.0}
    if not states:
        return rep
    first = next(iter(states.values()))
    A0, twist, n, m = first.A0, first.twist, first.n, first.m
    I = np.eye(m)

    def shifted(C):
        if twist.kind == "difference":
            return C - I
        if twist.kind == "q":
            return C / twist.q
        return C

    for l, s in states.items():
        for i in range(n):
            g = s.spectra()[i]
            rep["spectra"] = max(rep["spectra"], spectrum_error(s.C[i], g) / (1.0 + np.max(np.abs(g))))
        ones = tuple(x + 1 for x in l)
        if ones in states:
            for i in range(n):
                pred = twist.diagonal(s.C[i], A0, 1)
                rep["diagonal"] = max(rep["diagonal"], _rel(states[ones].C[i] - pred, 1 + np.linalg.norm(pred)))
        for i in range(n):
            li = tuple(x + (t == i) for t, x in enumerate(l))
            if li not in states:
                continue
            C, Ct = s.C, states[li].C
            lhs = _exchange_side(C, A0, shifted, i)
            rhs = _exchange_side(Ct, A0, shifted, i + 1)
            rep["exchange"] = max(rep["exchange"], (lhs - rhs).norm() / max(lhs.norm(), 1.0))
    return rep


def _exchange_side(C, A0, shifted, split):
    """(z - s C[split]) .. (z - s C[n-1]) A0 (z - C[0]) .. (z - C[split-1])."""
    m = C.shape[1]
    P = MatrixPolynomial.constant(np.eye(m))
    for t in range(split, len(C)):
        P = P @ MatrixPolynomial.linear(shifted(C[t]))
    P = P.right(A0)
    for t in range(split):
        P = P @ MatrixPolynomial.linear(C[t])
    return P


def spectral_curve(A: MatrixPolynomial) -> np.ndarray:
    """Coefficients c[a, b] of z^a w^b in det(A(z) - w I).

    Recovered by two-dimensional FFT interpolation on the unit torus,
    where the transform is perfectly conditioned.
    """
    m, n = A.m, A.n
    Nz, Nw = m * n + 1, m + 1
    zs = np.exp(2j * np.pi * np.arange(Nz) / Nz)
    ws = np.exp(2j * np.pi * np.arange(Nw) / Nw)
    I = np.eye(m)
    vals = np.array([[np.linalg.det(A(z) - w * I) for w in ws] for z in zs])
    c = np.fft.fft2(vals) / (Nz * Nw)
    return c

"""Matrix polynomials over the complex numbers.

A matrix polynomial of degree ``n`` is stored highest coefficient first,

    A(z) = A[0] z^n + A[1] z^(n-1) + ... + A[n],

as a complex array of shape ``(n + 1, m, m)``.  The module provides
evaluation, the determinant, eigenvalues and pencil eigenvectors, right
divisors and the reconstruction of a polynomial from its divisors, and the
formal solution data (exponents and series coefficients) of the difference
system ``Y(z + 1) = A(z) Y(z)`` at infinity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .config import DEFAULT, Tolerances
from .errors import (
    CongruenceError,
    GenericityError,
    InconsistencyError,
    LeadingCoefficientError,
    RootMismatchError,
    UnsupportedConfigurationError,
    ValidationError,
)


def as_matrix(X, name="matrix") -> np.ndarray:
    """Return ``X`` as a square complex array, rejecting NaN/Inf."""
    X = np.array(X, dtype=complex)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name} has non-finite entries")
    return X


@dataclass(frozen=True, eq=False)
class MatrixPolynomial:
    """Square matrix polynomial with coefficients stored highest first."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[1] != c.shape[2] or c.shape[0] < 1:
            raise ValidationError(f"coefficients must have shape (n+1, m, m), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValidationError("coefficients have non-finite entries")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def leading(self) -> np.ndarray:
        return self.coeffs[0]

    def __call__(self, z) -> np.ndarray:
        return evaluate(self, z)

    def __repr__(self):
        return f"MatrixPolynomial(m={self.m}, n={self.n})"

    def __matmul__(self, other):
        return poly_mul(self, other)

    def __add__(self, other):
        return poly_add(self, other)

    def __sub__(self, other):
        return poly_add(self, other, -1.0)

    def norm(self) -> float:
        """Frobenius norm of the stacked coefficients."""
        return float(np.linalg.norm(self.coeffs.ravel()))

    def transpose(self) -> "MatrixPolynomial":
        """Entrywise transpose, z -> A(z)^t."""
        return MatrixPolynomial(np.transpose(self.coeffs, (0, 2, 1)))

    def shift(self, c) -> "MatrixPolynomial":
        """Return the polynomial z -> A(z + c)."""
        out = np.zeros_like(self.coeffs)
        # Horner in polynomial arithmetic: P <- P (z + c) + A_k
        for Ak in self.coeffs:
            times_z = np.zeros_like(out)
            times_z[:-1] = out[1:]
            out = times_z + c * out
            out[-1] += Ak
        return MatrixPolynomial(out)

    def left(self, M) -> "MatrixPolynomial":
        """Return M A(z) for a constant matrix M."""
        return MatrixPolynomial(np.einsum("ij,kjl->kil", as_matrix(M), self.coeffs))

    def right(self, M) -> "MatrixPolynomial":
        """Return A(z) M for a constant matrix M."""
        return MatrixPolynomial(np.einsum("kij,jl->kil", self.coeffs, as_matrix(M)))

    def trimmed(self, tol=0.0) -> "MatrixPolynomial":
        """Drop leading coefficients of norm <= tol * norm (keeps at least one)."""
        scale = max(self.norm(), 1e-300)
        c = self.coeffs
        while c.shape[0] > 1 and np.linalg.norm(c[0]) <= tol * scale:
            c = c[1:]
        return MatrixPolynomial(c)

    @classmethod
    def linear(cls, B) -> "MatrixPolynomial":
        """The monic linear factor z - B."""
        B = as_matrix(B, "B")
        return cls(np.stack([np.eye(B.shape[0], dtype=complex), -B]))

    @classmethod
    def constant(cls, M) -> "MatrixPolynomial":
        return cls(as_matrix(M)[None])


def evaluate(A: MatrixPolynomial, z) -> np.ndarray:
    """Evaluate ``A`` at a complex point by Horner's rule."""
    out = A.coeffs[0].copy()
    for Ak in A.coeffs[1:]:
        out = out * z + Ak
    return out


def poly_mul(P: MatrixPolynomial, Q: MatrixPolynomial) -> MatrixPolynomial:
    """Product P(z) Q(z) of two matrix polynomials."""
    out = np.zeros((P.n + Q.n + 1, P.m, P.m), dtype=complex)
    for i, Pi in enumerate(P.coeffs):
        for j, Qj in enumerate(Q.coeffs):
            out[i + j] += Pi @ Qj
    return MatrixPolynomial(out)


def poly_add(P: MatrixPolynomial, Q: MatrixPolynomial, sign=1.0) -> MatrixPolynomial:
    d = max(P.n, Q.n)
    out = np.zeros((d + 1, P.m, P.m), dtype=complex)
    out[d - P.n:] += P.coeffs
    out[d - Q.n:] += sign * Q.coeffs
    return MatrixPolynomial(out)


def product(factors: Sequence[np.ndarray], lead=None) -> MatrixPolynomial:
    """Return lead (z - X_1)(z - X_2)...(z - X_N)."""
    factors = [as_matrix(X) for X in factors]
    m = factors[0].shape[0] if factors else as_matrix(lead).shape[0]
    P = MatrixPolynomial.constant(np.eye(m) if lead is None else lead)
    for X in factors:
        P = P @ MatrixPolynomial.linear(X)
    return P


def divide_by_roots(P: MatrixPolynomial, roots, tol=DEFAULT.remainder) -> MatrixPolynomial:
    """Exact division of P(z) by the scalar polynomial prod (z - r).

    Raises InconsistencyError when a remainder is not negligible relative to
    the size of the dividend.
    """
    c = P.coeffs
    for r in roots:
        if c.shape[0] < 2:
            raise InconsistencyError("dividend degree too small for exact division")
        q = np.zeros((c.shape[0] - 1,) + c.shape[1:], dtype=complex)
        acc = c[0].copy()
        q[0] = acc
        for k in range(1, c.shape[0] - 1):
            acc = acc * r + c[k]
            q[k] = acc
        rem = acc * r + c[-1]
        scale = np.linalg.norm(c.ravel()) * max(1.0, abs(r)) ** (c.shape[0] - 1)
        if np.linalg.norm(rem) > tol * scale:
            raise InconsistencyError(
                f"division by (z - {r:.6g}) leaves relative remainder "
                f"{np.linalg.norm(rem) / scale:.3e}"
            )
        c = q
    return MatrixPolynomial(c)


def right_divide_linear(A: MatrixPolynomial, B):
    """Right division A(z) = Q(z)(z - B) + R; returns (Q, R)."""
    B = as_matrix(B, "B")
    if A.n < 1:
        raise ValidationError("cannot divide a constant by a linear factor")
    q = np.zeros((A.n, A.m, A.m), dtype=complex)
    acc = A.coeffs[0].copy()
    q[0] = acc
    for k in range(1, A.n):
        acc = A.coeffs[k] + acc @ B
        q[k] = acc
    rem = A.coeffs[-1] + acc @ B
    return MatrixPolynomial(q), rem


def _root_radius(A: MatrixPolynomial) -> float:
    a0 = np.linalg.norm(A.coeffs[0])
    if a0 == 0:
        return 1.0
    r = 1.0
    for k in range(1, A.n + 1):
        r = max(r, (np.linalg.norm(A.coeffs[k]) / a0) ** (1.0 / k))
    return r


def det_poly(A: MatrixPolynomial) -> np.ndarray:
    """Coefficients of the scalar polynomial det A(z), highest degree first.

    The determinant is sampled at ``mn + 1`` points on a circle whose radius
    matches the root scale of ``A`` and the coefficients are recovered with
    an FFT.  The result has length ``mn + 1``; its first entry is det A_0.
    """
    N = A.m * A.n + 1
    r = _root_radius(A)
    pts = r * np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.array([np.linalg.det(evaluate(A, z)) for z in pts])
    c = np.fft.fft(vals) / N          # c[j] = coeff_j * r**j, ascending
    c = c * r ** (-np.arange(N, dtype=float))
    return c[::-1].copy()


def check_leading(A0, tol: Tolerances = DEFAULT) -> None:
    """Raise LeadingCoefficientError if A0 is numerically singular."""
    A0 = as_matrix(A0, "A0")
    if not np.isfinite(np.linalg.cond(A0)) or np.linalg.cond(A0) > tol.leading_condition:
        raise LeadingCoefficientError("leading coefficient is numerically singular")


def companion(A: MatrixPolynomial) -> np.ndarray:
    """Block companion matrix of A_0^{-1} A(z)."""
    m, n = A.m, A.n
    M = np.linalg.solve(A.coeffs[0], np.concatenate(list(A.coeffs[1:]), axis=1))
    C = np.zeros((m * n, m * n), dtype=complex)
    C[:m, :] = -M
    if n > 1:
        C[m:, :-m] = np.eye(m * (n - 1))
    return C


def eigenvalues(A: MatrixPolynomial, tol: Tolerances = DEFAULT) -> np.ndarray:
    """The ``mn`` roots of det A(z) via the block companion linearization."""
    check_leading(A.leading, tol)
    if A.n == 0:
        return np.zeros(0, dtype=complex)
    return sla.eigvals(companion(A))


def sort_values(values) -> np.ndarray:
    """Sort complex values by real part, then imaginary part."""
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def default_groups(A: MatrixPolynomial, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Deterministic grouping: sorted eigenvalues cut into n blocks of m."""
    return sort_values(eigenvalues(A, tol)).reshape(A.n, A.m)


def congruence_defect(a, b, q=None) -> float:
    """Distance of a - b (or log(a/b)/log q) from the nearest integer."""
    if q is None:
        d = complex(a) - complex(b)
    else:
        d = np.log(complex(a) / complex(b)) / np.log(complex(q))
        # branch of the logarithm: any multiple of 2 pi i / log q is fine too
        per = 2j * np.pi / np.log(complex(q))
        if per != 0:
            d = d - per * np.round((d / per).real)
    return abs(d - np.round(d.real))


def check_noncongruent(values, tol: Tolerances = DEFAULT, q=None, margin=None) -> None:
    """Raise CongruenceError if two values coincide or differ by an integer.

    For ``q`` given, the test is for ratios equal to an integer power of q.
    ``margin`` overrides the absolute tolerance.
    """
    values = np.asarray(values, dtype=complex).ravel()
    eps = tol.congruence if margin is None else margin
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if congruence_defect(values[i], values[j], q) < eps:
                raise CongruenceError(
                    f"values {values[i]:.6g} and {values[j]:.6g} are congruent"
                )


def match_spectrum(computed, expected, tol: Tolerances = DEFAULT):
    """Greedy nearest-neighbour matching of two multisets of eigenvalues.

    Returns ``(perm, err)`` with ``computed[perm[k]]`` matched to
    ``expected[k]`` and ``err`` the largest matched distance.  If for some
    expected value two unused candidates are within ``match_ambiguity`` of
    each other and of the target a GenericityError is raised.
    """
    computed = np.asarray(computed, dtype=complex).ravel()
    expected = np.asarray(expected, dtype=complex).ravel()
    if computed.shape != expected.shape:
        raise ValidationError("spectra of different sizes")
    free = list(range(len(computed)))
    perm = np.empty(len(expected), dtype=int)
    err = 0.0
    # match the expected values in order of how well-separated their best match is
    for k in np.argsort([np.min(np.abs(computed - e)) for e in expected], kind="stable"):
        dist = np.abs(computed[free] - expected[k])
        order = np.argsort(dist, kind="stable")
        best = free[order[0]]
        if len(order) > 1 and dist[order[1]] - dist[order[0]] < tol.match_ambiguity:
            raise GenericityError("ambiguous eigenvalue matching")
        perm[k] = best
        err = max(err, float(dist[order[0]]))
        free.remove(best)
    return perm, err


def pencil_eigenvector(A: MatrixPolynomial, a, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Kernel vector of A(a) for a simple root ``a`` of det A(z).

    The vector has unit norm and its first coordinate of largest modulus is
    real and positive.
    """
    M = evaluate(A, a)
    _, s, Vh = np.linalg.svd(M)
    # scale by the size of the terms, so that m == 1 is not trivially rejected
    scale = sum(np.linalg.norm(Ak, 2) * abs(a) ** (A.n - k) for k, Ak in enumerate(A.coeffs))
    if A.m > 1 and s[0] <= tol.diagonal * scale:
        raise GenericityError("A(a) vanishes identically")
    if s[-1] > tol.root_residual * scale:
        raise RootMismatchError(f"{complex(a):.6g} is not a root (relative sigma_min {s[-1] / scale:.2e})")
    if A.m > 1 and s[-2] <= tol.simple_root * s[0]:
        raise GenericityError(f"root {complex(a):.6g} is not simple: kernel dimension > 1")
    v = Vh[-1].conj()
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    return v / np.linalg.norm(v)


def left_eigenvector(A: MatrixPolynomial, a, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Vector w with A(a)^t w = 0 (kernel of the transposed polynomial)."""
    return pencil_eigenvector(A.transpose(), a, tol)


def right_divisor(A: MatrixPolynomial, group, tol: Tolerances = DEFAULT) -> np.ndarray:
    """The matrix B with spectrum ``group`` such that z - B divides A on the right.

    B = V diag(group) V^{-1} where the columns of V are pencil eigenvectors.
    """
    group = np.asarray(group, dtype=complex).ravel()
    if len(group) != A.m:
        raise ValidationError(f"group must contain m={A.m} values")
    V = np.column_stack([pencil_eigenvector(A, a, tol) for a in group])
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond >= tol.max_condition:
        raise GenericityError(f"eigenvectors of the group are dependent (cond {cond:.2e})")
    return V @ np.diag(group) @ np.linalg.inv(V)


def verify_divisor(A: MatrixPolynomial, B) -> float:
    """Normalized residual of A_0 B^n + A_1 B^(n-1) + ... + A_n."""
    B = as_matrix(B, "B")
    R = A.coeffs[0].copy()
    for Ak in A.coeffs[1:]:
        R = R @ B + Ak
    scale = max(A.norm(), 1e-300) * (1.0 + np.linalg.norm(B)) ** A.n
    return float(np.linalg.norm(R) / scale)


def eigenpairs(B, group=None, tol: Tolerances = DEFAULT):
    """Eigenvalues and eigenvectors of B, optionally matched to ``group``."""
    vals, vecs = np.linalg.eig(as_matrix(B, "B"))
    if group is not None:
        group = np.asarray(group, dtype=complex).ravel()
        perm, err = match_spectrum(vals, group, tol)
        scale = 1.0 + np.max(np.abs(group))
        if err > 1e-6 * scale:
            raise RootMismatchError(f"spectrum deviates from the prescribed group by {err:.2e}")
        return group, vecs[:, perm]
    return vals, vecs


def from_right_divisors(A0, divisors, groups=None, tol: Tolerances = DEFAULT) -> MatrixPolynomial:
    """Unique degree-n polynomial with leading coefficient A0 and right divisors z - B_i.

    Built by induction: if Ahat has the divisors B_1..B_{k-1}, the next
    left factor z - X is fixed by X w_j = a_j w_j with w_j = Ahat(a_j) v_j,
    where (a_j, v_j) are the eigenpairs of B_k.
    """
    A0 = as_matrix(A0, "A0")
    check_leading(A0, tol)
    divisors = [as_matrix(B, f"B_{i + 1}") for i, B in enumerate(divisors)]
    if not divisors:
        return MatrixPolynomial.constant(A0)
    if any(B.shape != A0.shape for B in divisors):
        raise ValidationError("divisor dimensions do not match A0")
    if groups is None:
        groups = [None] * len(divisors)
    eigen = [eigenpairs(B, g, tol) for B, g in zip(divisors, groups)]
    for vals, V in eigen:
        if np.linalg.cond(V) >= tol.max_condition:
            raise GenericityError("divisor is not diagonalizable")
    Ahat = MatrixPolynomial.linear(divisors[0])
    for vals, V in eigen[1:]:
        W = np.column_stack([evaluate(Ahat, a) @ V[:, j] for j, a in enumerate(vals)])
        cond = np.linalg.cond(W)
        if not np.isfinite(cond) or cond >= tol.max_condition:
            raise GenericityError(f"intermediate vectors are dependent (cond {cond:.2e})")
        X = W @ np.diag(vals) @ np.linalg.inv(W)
        Ahat = MatrixPolynomial.linear(X) @ Ahat
    return Ahat.left(A0)


def factor_from_left(A: MatrixPolynomial, groups, tol: Tolerances = DEFAULT):
    """Factor A = A_0 (z - C_1) ... (z - C_n) with Sp(C_i) = groups[i].

    The factors are peeled from the right: C_n is the right divisor for the
    last group, and the procedure recurses on the quotient.
    """
    groups = np.asarray(groups, dtype=complex).reshape(A.n, A.m)
    C = [None] * A.n
    P = A
    for i in range(A.n - 1, -1, -1):
        C[i] = right_divisor(P, groups[i], tol)
        if i > 0:
            P, _ = right_divide_linear(P, C[i])
    return C


# ---------------------------------------------------------------------------
# formal solution at infinity

@dataclass(frozen=True, eq=False)
class FormalSolution:
    """Formal solution data of Y(z + 1) = A(z) Y(z) at infinity.

    Attributes
    ----------
    rho : ndarray, shape (m,)
        Diagonal of the leading coefficient.
    d : ndarray, shape (m,)
        Characteristic exponents, ``d_i = (A_1)_ii / rho_i + n / 2``.
    Yhat : ndarray, shape (K, m, m)
        Series coefficients Yhat_1 .. Yhat_K (Yhat_0 = I is implied).
    reduced_d : ndarray, shape (m,)
        Exponents ``(A_1)_ii / rho_i`` of the reduced system z^{-n} A(z),
        which are the ones entering the series identity.
    pole_order : int
        Order n of the pole of A at infinity.
    case : str
        ``"distinct"`` (diagonal leading term, distinct entries) or
        ``"scalar"`` (scalar leading term with diagonal A_1).
    """

    rho: np.ndarray
    d: np.ndarray
    Yhat: np.ndarray
    reduced_d: np.ndarray
    pole_order: int
    case: str

    @property
    def K(self) -> int:
        return self.Yhat.shape[0]


def _coefficient_stack(A, pole_order):
    if isinstance(A, MatrixPolynomial):
        c = A.coeffs
    else:
        c = np.array([as_matrix(X) for X in A])
    n = c.shape[0] - 1 if pole_order is None else int(pole_order)
    return c, n


def _binom_series(alpha, P):
    """Coefficients of (1 + x)^alpha up to x^P (alpha array-like)."""
    alpha = np.asarray(alpha, dtype=complex)
    out = np.ones((P + 1,) + alpha.shape, dtype=complex)
    for j in range(1, P + 1):
        out[j] = out[j - 1] * (alpha - j + 1) / j
    return out


def _normal_form(c, tol: Tolerances):
    A0 = c[0]
    m = A0.shape[0]
    scale = max(np.linalg.norm(A0), 1e-300)
    off = A0 - np.diag(np.diag(A0))
    if np.linalg.norm(off) > tol.diagonal * scale * 1e2:
        raise UnsupportedConfigurationError("leading coefficient is not diagonal")
    rho = np.diag(A0).copy()
    if np.any(np.abs(rho) <= tol.diagonal * scale):
        raise UnsupportedConfigurationError("leading coefficient has a zero diagonal entry")
    gaps = [abs(rho[i] - rho[j]) for i in range(m) for j in range(i + 1, m)]
    if not gaps or min(gaps) > 1e-8 * scale:
        return "distinct", rho
    if max(gaps) <= tol.diagonal * scale * 1e2:
        A1 = c[1] if c.shape[0] > 1 else np.zeros_like(A0)
        if np.linalg.norm(A1 - np.diag(np.diag(A1))) > tol.diagonal * max(np.linalg.norm(A1), scale) * 1e2:
            raise UnsupportedConfigurationError(
                "scalar leading coefficient requires a diagonal A_1")
        r = np.diag(A1) / rho
        for i in range(m):
            for j in range(m):
                dd = r[i] - r[j]
                if i != j and abs(dd - np.round(dd.real)) < tol.congruence and abs(np.round(dd.real)) >= 1:
                    raise UnsupportedConfigurationError(
                        f"resonant exponents {r[i]:.6g}, {r[j]:.6g}")
        return "scalar", np.full(m, rho[0])
    raise UnsupportedConfigurationError("repeated diagonal entries in a non-scalar leading coefficient")


def formal_exponents(A, pole_order=None, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Characteristic exponents d_i = (A_1)_ii / rho_i + n / 2."""
    c, n = _coefficient_stack(A, pole_order)
    _, rho = _normal_form(c, tol)
    A1 = np.diag(c[1]) if c.shape[0] > 1 else np.zeros(c.shape[1], dtype=complex)
    return A1 / rho + n / 2.0


def _order_term(p, c, Y, dcoef):
    """Coefficient of z^{-p} in  Yhat(z+1) D(z) - z^{-n} A(z) Yhat(z)."""
    m = c.shape[1]
    L = len(Y)
    lhs = np.zeros((m, m), dtype=complex)
    for q in range(p + 1):
        # coefficient of z^{-q} in Yhat(z + 1)
        Sq = np.zeros((m, m), dtype=complex)
        for l in range(min(q, L - 1) + 1):
            b = _binom_int(-l, q - l)
            if b != 0:
                Sq += b * Y[l]
        lhs += Sq * dcoef[p - q][None, :]
    rhs = np.zeros((m, m), dtype=complex)
    for k in range(min(p, c.shape[0] - 1) + 1):
        if p - k < L:
            rhs += c[k] @ Y[p - k]
    return lhs - rhs


def _binom_int(a, j):
    """Binomial coefficient binom(a, j) for integer a (possibly negative)."""
    out = 1.0
    for i in range(j):
        out = out * (a - i) / (i + 1)
    return out


def formal_series(A, K: int, pole_order=None, tol: Tolerances = DEFAULT) -> FormalSolution:
    """Coefficients Yhat_1..Yhat_K of the formal solution at infinity.

    The system is reduced to pole order zero by the factor z^{-n} (the
    Gamma-function substitution), and the identity

        Yhat(z + 1) diag(rho_i (1 + 1/z)^{r_i}) = z^{-n} A(z) Yhat(z),

    with ``r_i = (A_1)_ii / rho_i``, is solved order by order in 1/z.

    Parameters
    ----------
    A : MatrixPolynomial or sequence of matrices
        Coefficients A_0, A_1, ... (highest first).
    K : int
        Number of series coefficients to return (K >= 1).
    pole_order : int, optional
        Order of the pole at infinity; defaults to the polynomial degree.
        With ``pole_order=0`` the coefficients describe A_0 + A_1/z + ...
    """
    if int(K) < 1:
        raise ValidationError("series order K must be at least 1")
    K = int(K)
    c, n = _coefficient_stack(A, pole_order)
    case, rho = _normal_form(c, tol)
    m = c.shape[1]
    A1 = c[1] if c.shape[0] > 1 else np.zeros((m, m), dtype=complex)
    r = np.diag(A1) / rho
    dcoef = rho[None, :] * _binom_series(r, K + 2)
    Y = [np.eye(m, dtype=complex)] + [np.zeros((m, m), dtype=complex) for _ in range(K + 1)]
    off = ~np.eye(m, dtype=bool)
    drho = rho[None, :] - rho[:, None]          # (rho_j - rho_i)
    for p in range(1, K + 2):
        if case == "distinct":
            if p >= 2:
                R = _order_term(p, c, Y, dcoef)
                Y[p - 1][np.diag_indices(m)] = np.diag(R) / ((p - 1) * rho)
            if p <= K:
                R = _order_term(p, c, Y, dcoef)
                Y[p][off] = -R[off] / drho[off]
        else:
            if p >= 2:
                R = _order_term(p, c, Y, dcoef)
                coef = rho[0] * (r[None, :] - r[:, None] - (p - 1))
                Y[p - 1] = -R / coef
    Yhat = np.array(Y[1:K + 1])
    return FormalSolution(rho=rho, d=r + n / 2.0, Yhat=Yhat, reduced_d=r,
                          pole_order=n, case=case)


def series_residual_coefficients(A, data: FormalSolution, orders: int, pole_order=None):
    """Coefficients R_0..R_orders of the residual of the truncated series identity."""
    c, _ = _coefficient_stack(A, pole_order)
    m = c.shape[1]
    Y = [np.eye(m, dtype=complex)] + list(data.Yhat)
    dcoef = data.rho[None, :] * _binom_series(data.reduced_d, orders)
    return np.array([_order_term(p, c, Y, dcoef) for p in range(orders + 1)])


def series_residual(A, data: FormalSolution, z, extra: int = 30, pole_order=None) -> float:
    """Norm of the residual of the truncated series identity at a point z.

    The residual is summed from its exact Laurent coefficients in 1/z, which
    avoids the cancellation of evaluating both sides in floating point.
    Valid for |z| > 1.
    """
    c, _ = _coefficient_stack(A, pole_order)
    orders = data.K + c.shape[0] + extra
    R = series_residual_coefficients(A, data, orders, pole_order)
    zp = complex(z) ** -np.arange(orders + 1)
    return float(np.linalg.norm(np.tensordot(zp, R, axes=1)))

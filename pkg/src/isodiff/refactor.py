"""Refactorization of products of linear matrix factors.

Adjacent exchange (z - X)(z - Y) = (z - S)(z - T) with spectra swapped,
arbitrary permutations of longer products, and the commuting flows on
bi-infinite twisted factor sequences.

Permutations are 0-based index arrays throughout this module.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import GenericityError, ValidationError
from .matpoly import MatrixPolynomial, as_matrix, product, right_divisor

VARIANTS = ("difference", "q", "autonomous")


# ---------------------------------------------------------------------------
# twist rules

def _power(A0, mu):
    if mu >= 0:
        return np.linalg.matrix_power(A0, mu)
    return np.linalg.matrix_power(np.linalg.inv(A0), -mu)


@dataclass(frozen=True)
class Twist:
    """Rule relating factor k + n to factor k of a bi-infinite sequence.

    ``difference``:  Q_{k+n} = I + A0 Q_k A0^{-1}
    ``q``:           Q_{k+n} = q A0 Q_k A0^{-1}
    ``autonomous``:  Q_{k+n} = A0 Q_k A0^{-1}   (periodic when A0 = I)
    """

    kind: str = "difference"
    q: complex | None = None

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise ValidationError(f"unknown variant {self.kind!r}")
        if self.kind == "q":
            if self.q is None or not np.isfinite(self.q) or self.q == 0 or abs(abs(self.q) - 1) < 1e-12:
                raise ValidationError("q-variant needs a finite q with |q| != 0, 1")
        elif self.q is not None:
            object.__setattr__(self, "q", None)

    @classmethod
    def parse(cls, text: str) -> "Twist":
        """Parse ``difference``, ``autonomous`` or ``q=VALUE``."""
        text = text.strip()
        if text.startswith("q="):
            try:
                q = complex(text[2:].replace(" ", ""))
            except ValueError:
                raise ValidationError(f"bad q value in {text!r}") from None
            if q.imag == 0:
                q = q.real
            return cls("q", q)
        return cls(text)

    def __str__(self):
        return f"q={self.q!r}" if self.kind == "q" else self.kind

    def apply(self, C, A0, mu: int) -> np.ndarray:
        """Matrix of the factor mu periods away from the base factor C."""
        P = _power(A0, mu)
        Q = P @ np.linalg.solve(P.T, np.asarray(C, dtype=complex).T).T
        if self.kind == "difference":
            return Q + mu * np.eye(len(C))
        if self.kind == "q":
            return self.q ** mu * Q
        return Q

    def remove(self, Q, A0, mu: int) -> np.ndarray:
        """Inverse of ``apply``: recover the base matrix."""
        Q = np.asarray(Q, dtype=complex)
        if self.kind == "difference":
            Q = Q - mu * np.eye(len(Q))
        elif self.kind == "q":
            Q = Q / self.q ** mu
        P = _power(A0, mu)
        return np.linalg.solve(P, Q) @ P

    def shift_values(self, values, steps):
        """Spectrum of a factor after ``steps`` unit moves of its own coordinate."""
        values = np.asarray(values, dtype=complex)
        if self.kind == "difference":
            return values - steps
        if self.kind == "q":
            return values * self.q ** (-np.asarray(steps, dtype=float))
        return values.copy()

    def diagonal(self, B, A0, steps: int = 1) -> np.ndarray:
        """Move all lattice coordinates by ``steps`` (may be negative)."""
        B = np.asarray(B, dtype=complex)
        for _ in range(abs(steps)):
            if steps > 0:
                B = np.linalg.solve(A0, B @ A0)
                if self.kind == "difference":
                    B = B - np.eye(len(B))
                elif self.kind == "q":
                    B = B / self.q
            else:
                if self.kind == "difference":
                    B = B + np.eye(len(B))
                elif self.kind == "q":
                    B = B * self.q
                B = A0 @ np.linalg.solve(A0.T, B.T).T
        return B

    @property
    def congruence_q(self):
        return self.q if self.kind == "q" else None


# ---------------------------------------------------------------------------
# adjacent exchange

def _check_cond(M, limit, what):
    c = np.linalg.cond(M)
    if not np.isfinite(c) or c > limit:
        raise GenericityError(f"{what} is numerically singular (cond {c:.2e})")


def sylvester_solve(Y, X) -> np.ndarray:
    """Solve Y L - L X = I by a dense Kronecker-form solve."""
    m = Y.shape[0]
    I = np.eye(m)
    # column-major vec: vec(Y L) = (I kron Y) vec L, vec(L X) = (X^t kron I) vec L
    K = np.kron(I, Y) - np.kron(X.T, I)
    _check_cond(K, 1e14, "Sylvester operator (overlapping spectra)")
    L = np.linalg.solve(K, I.reshape(-1, order="F"))
    return L.reshape(m, m, order="F")


def swap_adjacent(X, Y, tol: Tolerances = DEFAULT):
    """Exchange two linear factors: (z - X)(z - Y) = (z - S)(z - T).

    Returns ``(S, T)`` with Sp(S) = Sp(Y) and Sp(T) = Sp(X).
    """
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    L = sylvester_solve(Y, X)
    _check_cond(L, tol.sylvester_condition, "Sylvester solution")
    Linv = np.linalg.inv(L)
    return X + Linv, Y - Linv


def swap_adjacent_2x2(X, Y, tol: Tolerances = DEFAULT):
    """Closed-form exchange for 2x2 factors (conjugation formulas)."""
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    if X.shape != (2, 2) or Y.shape != (2, 2):
        raise ValidationError("closed form exchange needs 2x2 matrices")
    I = np.eye(2)
    U = X + Y - np.trace(Y) * I
    V = X + Y - np.trace(X) * I
    _check_cond(U, tol.max_condition, "conjugator X + Y - tr(Y)")
    _check_cond(V, tol.max_condition, "conjugator X + Y - tr(X)")
    S = U @ Y @ np.linalg.inv(U)
    T = np.linalg.solve(V, X @ V)
    return S, T


def swap_via_eigen(X, Y, tol: Tolerances = DEFAULT):
    """Exchange through the right divisor of (z - X)(z - Y) with spectrum Sp(X)."""
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    quad = product([X, Y])
    T = right_divisor(quad, np.linalg.eigvals(X), tol)
    return X + Y - T, T


def conjugation_residuals(X, Y, S, T) -> float:
    """Residual of the four conjugation identities implied by the exchange."""
    scale = 1.0 + max(np.linalg.norm(M) for M in (X, Y, S, T))
    res = 0.0
    D = X - S
    res = max(res, np.linalg.norm(D @ Y - S @ D))          # Y = D^{-1} S D
    res = max(res, np.linalg.norm(D @ T - X @ D))          # T = D^{-1} X D
    E = Y - T
    res = max(res, np.linalg.norm(X @ E - E @ T))          # X = E T E^{-1}
    res = max(res, np.linalg.norm(S @ E - E @ Y))          # S = E Y E^{-1}
    return float(res / scale ** 2)


def sample_points(count: int, radius: float = 1.0):
    """Deterministic sample points on a circle, off the real axis."""
    k = np.arange(count)
    return radius * np.exp(2j * np.pi * (k + 0.37) / count)


def product_residual(left, right, points=None) -> float:
    """Relative residual of prod (z - L_k) = prod (z - R_k) at sample points.

    The default sample set has 2mN + 1 points on a circle of radius
    comparable to the factor norms.
    """
    left = [as_matrix(M) for M in left]
    right = [as_matrix(M) for M in right]
    m, N = left[0].shape[0], len(left)
    radius = 1.0 + max(np.linalg.norm(M, 2) for M in left + right)
    if points is None:
        points = sample_points(2 * m * N + 1, radius)
    I = np.eye(m)
    worst = 0.0
    for z in points:
        P, Q, scale = I.astype(complex), I.astype(complex), 1.0
        for L, R in zip(left, right):
            P = P @ (z * I - L)
            Q = Q @ (z * I - R)
        for L in left:
            scale *= abs(z) + np.linalg.norm(L, 2)
        worst = max(worst, np.linalg.norm(P - Q, 2) / scale)
    return float(worst)


# ---------------------------------------------------------------------------
# permutations

def _reduced_word(sigma, strategy="bubble"):
    """Adjacent positions to swap, turning type order 0..N-1 into sigma."""
    sigma = list(sigma)
    N = len(sigma)
    if sorted(sigma) != list(range(N)):
        raise ValidationError(f"not a permutation: {sigma}")
    target_pos = {t: r for r, t in enumerate(sigma)}
    order = list(range(N))          # order[r] = type currently at position r
    word = []
    if strategy == "bubble":
        changed = True
        while changed:
            changed = False
            for r in range(N - 1):
                if target_pos[order[r]] > target_pos[order[r + 1]]:
                    order[r], order[r + 1] = order[r + 1], order[r]
                    word.append(r)
                    changed = True
    elif strategy == "selection":
        for r in range(N):
            s = order.index(sigma[r])
            for u in range(s - 1, r - 1, -1):
                order[u], order[u + 1] = order[u + 1], order[u]
                word.append(u)
    else:
        raise ValidationError(f"unknown strategy {strategy!r}")
    return word


def permute_product(factors, sigma, strategy="bubble", tol: Tolerances = DEFAULT):
    """Rewrite prod (z - X_k) as prod (z - Y_sigma(k)) with Sp(Y_k) = Sp(X_k).

    Parameters
    ----------
    factors : sequence of (m, m) arrays X_0..X_{N-1}
    sigma : permutation, ``sigma[r]`` is the type placed at position r
    strategy : ``"bubble"`` or ``"selection"``; the result does not depend
        on it generically, which makes it a useful self-check.

    Returns
    -------
    list of arrays Y indexed by type, so the new product is
    ``(z - Y[sigma[0]]) ... (z - Y[sigma[N-1]])``.
    """
    cur = [as_matrix(X) for X in factors]
    types = list(range(len(cur)))
    for r in _reduced_word(sigma, strategy):
        S, T = swap_adjacent(cur[r], cur[r + 1], tol)
        cur[r], cur[r + 1] = S, T
        types[r], types[r + 1] = types[r + 1], types[r]
    Y = [None] * len(cur)
    for r, t in enumerate(types):
        Y[t] = cur[r]
    return Y


# ---------------------------------------------------------------------------
# twisted factor sequences

@dataclass(frozen=True, eq=False)
class FactorSequence:
    """Bi-infinite sequence p_k = z - Q_k generated by n base factors and a twist.

    Indices are 1-based as in the flow labels: the base holds Q_1..Q_n and
    Q_{i + mu n} = twist.apply(Q_i, A0, mu).
    """

    base: np.ndarray
    A0: np.ndarray
    twist: Twist = field(default_factory=Twist)

    def __post_init__(self):
        base = np.array([as_matrix(C) for C in self.base])
        A0 = as_matrix(self.A0, "A0")
        if base.shape[1:] != A0.shape:
            raise ValidationError("base factors and A0 have different sizes")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "A0", A0)

    @property
    def n(self):
        return self.base.shape[0]

    @property
    def m(self):
        return self.base.shape[1]

    def factor(self, k: int) -> np.ndarray:
        """The matrix Q_k of the k-th factor (any integer k)."""
        mu, i = divmod(k - 1, self.n)
        return self.twist.apply(self.base[i], self.A0, mu)

    def window(self, start: int, length: int):
        return [self.factor(k) for k in range(start, start + length)]

    def with_factors(self, start: int, mats) -> "FactorSequence":
        """New sequence whose factors start..start+n-1 are ``mats``."""
        base = np.empty_like(self.base)
        for off, Q in enumerate(mats):
            k = start + off
            mu, i = divmod(k - 1, self.n)
            base[i] = self.twist.remove(Q, self.A0, mu)
        return replace(self, base=base)

    def polynomial(self) -> MatrixPolynomial:
        """A0 (z - Q_1) ... (z - Q_n)."""
        return product(list(self.base), self.A0)


def flow_F(seq: FactorSequence, l: int, tol: Tolerances = DEFAULT) -> FactorSequence:
    """Apply the flow F_l: move the first factor of each window l..l+n-1 to its end."""
    n = seq.n
    l = (l - 1) % n + 1
    cur = seq.window(l, n)
    for r in range(n - 1):
        cur[r], cur[r + 1] = swap_adjacent(cur[r], cur[r + 1], tol)
    return seq.with_factors(l + 1, cur)


def inverse_flow_F(seq: FactorSequence, l: int, tol: Tolerances = DEFAULT) -> FactorSequence:
    """Inverse of ``flow_F``: move the last factor of window l+1..l+n to its front."""
    n = seq.n
    l = (l - 1) % n + 1
    cur = seq.window(l + 1, n)
    for r in range(n - 2, -1, -1):
        cur[r], cur[r + 1] = swap_adjacent(cur[r], cur[r + 1], tol)
    return seq.with_factors(l, cur)


def apply_flows(seq: FactorSequence, steps, tol: Tolerances = DEFAULT) -> FactorSequence:
    """Apply F_1^{s_1} ... F_n^{s_n} (negative powers use the inverse)."""
    for j, s in enumerate(steps, start=1):
        f = flow_F if s > 0 else inverse_flow_F
        for _ in range(abs(int(s))):
            seq = f(seq, j, tol)
    return seq


def pi_action(seq: FactorSequence, sigma, tol: Tolerances = DEFAULT) -> FactorSequence:
    """Window-wise permutation: factor type k moves to position sigma[k].

    ``sigma`` is a 0-based permutation of range(n); the window 1..n is
    rewritten so that position sigma[k] carries the type of factor k, and the
    twist propagates the result to all other windows.
    """
    sigma = list(sigma)
    inv = [0] * len(sigma)
    for k, s in enumerate(sigma):
        inv[s] = k
    Y = permute_product(list(seq.base), inv, tol=tol)
    return replace(seq, base=np.array([Y[inv[r]] for r in range(seq.n)]))


def exchange_residual(seq: FactorSequence, i: int, j: int, tol: Tolerances = DEFAULT) -> float:
    """Residual of q_i^j p_j = p_j^i q_i with p = F_{i+1} ... F_j (q), 0 < j - i < n."""
    if not 0 < j - i < seq.n:
        raise ValidationError("need 0 < j - i < n")
    p = seq
    for l in range(j, i, -1):
        p = flow_F(p, l, tol)
    qj = flow_F(seq, j, tol)
    pi = flow_F(p, i, tol)
    return product_residual([qj.factor(i), p.factor(j)], [pi.factor(j), seq.factor(i)])


def telescope_residual(seq: FactorSequence, l: int = 1, tol: Tolerances = DEFAULT) -> float:
    """Max deviation of F_l F_{l+1} ... F_{l+n-1} (p)_k from p_{k-n} over one period."""
    out = seq
    for s in range(l + seq.n - 1, l - 1, -1):
        out = flow_F(out, s, tol)
    return float(max(np.linalg.norm(out.factor(k) - seq.factor(k - seq.n))
                     for k in range(1, seq.n + 1)))

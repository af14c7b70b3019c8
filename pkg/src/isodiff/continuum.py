"""Classical Schlesinger equations and their difference-equation limits.

A ContinuousSystem is dY/dzeta = (B_inf + sum_k B_k / (zeta - x_k)) Y.
Its residues move with the poles by the Schlesinger ODEs; ``integrate``
solves them along a polyline.  ``embed`` builds the difference systems whose
small-epsilon behaviour should reproduce the ODE (``limit_compare``) and the
continuous Schlesinger transformations (``transform_limit_check``).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import GenericityError, IntegrationError, ValidationError
from .flows import (
    DivisorState,
    FactorState,
    _multiplier_blocks,
    _unit,
    divisor_flow,
    elementary_down,
    elementary_up,
)
from .matpoly import (
    as_matrix,
    check_noncongruent,
    from_right_divisors,
    right_divisor,
    sort_values,
)


@dataclass(frozen=True, eq=False)
class ContinuousSystem:
    """Poles ``x`` (n,), residues ``B`` (n, m, m) and optional diagonal ``B_inf``."""

    x: np.ndarray
    B: np.ndarray
    B_inf: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex).ravel()
        B = np.array([as_matrix(X, f"residue {k}") for k, X in enumerate(self.B)])
        if len(x) != len(B):
            raise ValidationError("need one residue per pole")
        _check_poles(x)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "B", B)
        if self.B_inf is not None:
            Binf = as_matrix(self.B_inf, "B_inf")
            if np.linalg.norm(Binf - np.diag(np.diag(Binf))) > 1e-14 * (1 + np.linalg.norm(Binf)):
                raise ValidationError("B_inf must be diagonal")
            s = np.diag(Binf)
            if len(s) > 1 and min(abs(s[i] - s[j]) for i in range(len(s)) for j in range(i)) < 1e-12:
                raise ValidationError("B_inf must have distinct diagonal entries")
            object.__setattr__(self, "B_inf", Binf)

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def spectra(self) -> np.ndarray:
        """Sorted eigenvalues t_j of each residue."""
        return np.array([sort_values(np.linalg.eigvals(X)) for X in self.B])

    def coefficient(self, zeta) -> np.ndarray:
        """B(zeta) = B_inf + sum_k B_k / (zeta - x_k)."""
        out = np.zeros((self.m, self.m), dtype=complex) if self.B_inf is None else self.B_inf.copy()
        for xk, Bk in zip(self.x, self.B):
            out = out + Bk / (zeta - xk)
        return out


@dataclass(frozen=True)
class EmbeddingConfig:
    """Small parameter epsilon and anchors y (default: the poles of the system)."""

    epsilon: float
    y: tuple | None = None

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValidationError("epsilon must be positive")
        if self.y is not None:
            y = tuple(complex(v) for v in np.ravel(self.y))
            _check_poles(np.array(y))
            object.__setattr__(self, "y", y)

    def anchors(self, sys: ContinuousSystem) -> np.ndarray:
        return sys.x.copy() if self.y is None else np.array(self.y)


def _check_poles(x, limit=1e-10):
    for i in range(len(x)):
        for j in range(i):
            if abs(x[i] - x[j]) <= limit * (1 + abs(x[i])):
                raise ValidationError(f"coincident poles {x[i]:.6g} and {x[j]:.6g}")


def _comm(X, Y):
    return X @ Y - Y @ X


def schlesinger_rhs(sys: ContinuousSystem) -> np.ndarray:
    """Derivatives D[j, l] = d B_l / d x_j as an (n, n, m, m) array."""
    _check_poles(sys.x)
    n = sys.n
    D = np.zeros((n, n, sys.m, sys.m), dtype=complex)
    for j in range(n):
        for l in range(n):
            if l != j:
                D[j, l] = _comm(sys.B[j], sys.B[l]) / (sys.x[j] - sys.x[l])
                D[j, j] += _comm(sys.B[j], sys.B[l]) / (sys.x[l] - sys.x[j])
        if sys.B_inf is not None:
            D[j, j] -= _comm(sys.B[j], sys.B_inf)
    return D


def _rk4(sys: ContinuousSystem, direction, h):
    """One classical Runge-Kutta step of length h along ``direction``."""

    def f(x, B):
        s = replace(sys, x=x, B=B)
        return np.einsum("j,jlab->lab", direction, schlesinger_rhs(s))

    x0, B0 = sys.x, sys.B
    k1 = f(x0, B0)
    k2 = f(x0 + 0.5 * h * direction, B0 + 0.5 * h * k1)
    k3 = f(x0 + 0.5 * h * direction, B0 + 0.5 * h * k2)
    k4 = f(x0 + h * direction, B0 + h * k3)
    return replace(sys, x=x0 + h * direction, B=B0 + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def integrate(sys: ContinuousSystem, path, step: float = 1e-3, local_tol: float = 1e-10,
              drift_tol: float = 1e-6, max_halvings: int = 12) -> ContinuousSystem:
    """Integrate the Schlesinger ODEs along a polyline of pole positions.

    ``path`` is a sequence of pole vectors; the first must equal ``sys.x``.
    Each segment is covered by fixed RK4 steps of at most ``step`` (in the
    Euclidean length of the pole vector).  Every step is compared with two
    half steps; when they disagree by more than ``local_tol`` (relative) the
    step is halved, up to ``max_halvings`` times, which is how approach to a
    pole of the solution is detected.  Raises IntegrationError on step
    rejection, residue spectrum drift above ``drift_tol`` or pole collision.
    """
    path = [np.asarray(p, dtype=complex).ravel() for p in path]
    if not path:
        return sys
    if np.linalg.norm(path[0] - sys.x) > 1e-12 * (1 + np.linalg.norm(sys.x)):
        raise ValidationError("path must start at the current poles")
    spec0 = sys.spectra()
    cur = sys
    for a, b in zip(path[:-1], path[1:]):
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            continue
        direction = (b - a) / length
        nsteps = int(np.ceil(length / step - 1e-9))
        h0 = length / nsteps
        for s in range(nsteps):
            target = a + (s + 1) * h0 * direction
            try:
                cur = _advance(cur, direction, h0, local_tol, max_halvings)
                cur = replace(cur, x=target)          # remove accumulated rounding in x
                _check_poles(cur.x, 1e-8)
            except ValidationError as exc:
                raise IntegrationError(f"pole collision: {exc}") from None
        drift = np.max(np.abs(cur.spectra() - spec0))
        if drift > drift_tol * (1 + np.max(np.abs(spec0))):
            raise IntegrationError(f"residue spectra drifted by {drift:.2e}")
    return cur


def _advance(sys, direction, h, local_tol, halvings_left):
    full = _rk4(sys, direction, h)
    half = _rk4(_rk4(sys, direction, h / 2), direction, h / 2)
    err = np.linalg.norm(full.B - half.B) / (1 + np.linalg.norm(half.B))
    if err <= local_tol:
        return half
    if halvings_left == 0:
        raise IntegrationError(f"step rejected near x = {np.round(sys.x, 6)} (local error {err:.2e})")
    mid = _advance(sys, direction, h / 2, local_tol, halvings_left - 1)
    return _advance(mid, direction, h / 2, local_tol, halvings_left - 1)


# ---------------------------------------------------------------------------
# embedding into difference systems

def embedded_groups(sys: ContinuousSystem, anchors, eps) -> np.ndarray:
    return np.array([y / eps - t for y, t in zip(anchors, sys.spectra())])


def _leading(sys, eps):
    I = np.eye(sys.m, dtype=complex)
    return I if sys.B_inf is None else I + eps * sys.B_inf


def embed(sys: ContinuousSystem, cfg: EmbeddingConfig, tol: Tolerances = DEFAULT) -> FactorState:
    """Factor state C_i = y_i / eps - B_i with A0 = I + eps B_inf."""
    eps = cfg.epsilon
    y = cfg.anchors(sys)
    groups = embedded_groups(sys, y, eps)
    check_noncongruent(groups, tol)
    C = [yi / eps * np.eye(sys.m) - Bi for yi, Bi in zip(y, sys.B)]
    return FactorState(_leading(sys, eps), C, groups)


def embed_divisors(sys: ContinuousSystem, cfg: EmbeddingConfig, tol: Tolerances = DEFAULT) -> DivisorState:
    """Divisor state B_i(0) = y_i / eps - B_i with A0 = I + eps B_inf."""
    eps = cfg.epsilon
    y = cfg.anchors(sys)
    groups = embedded_groups(sys, y, eps)
    check_noncongruent(groups, tol)
    B = [yi / eps * np.eye(sys.m) - Bi for yi, Bi in zip(y, sys.B)]
    return DivisorState(_leading(sys, eps), B, groups)


def extract(C, anchors, eps) -> np.ndarray:
    """Inverse of the embedding: B_i = y_i / eps - C_i."""
    return np.array([y / eps * np.eye(len(X)) - X for y, X in zip(anchors, C)])


def lattice_target(x, eps) -> tuple:
    """Integer parts [x_i / eps], ignoring floating noise in the quotient."""
    q = np.asarray(x, dtype=float) / eps
    return tuple(int(v) for v in np.floor(np.round(q, 9)))


@dataclass
class LimitRow:
    epsilon: float
    index: int
    error: float


def limit_compare(sys: ContinuousSystem, cfg: EmbeddingConfig, x_target, halvings: int = 3,
                  step: float = 1e-3, tol: Tolerances = DEFAULT):
    """Compare long lattice flows with the Schlesinger ODE solution.

    For eps = cfg.epsilon / 2**h, h = 0..halvings, run the divisor flow from
    B_i(0) = y_i / eps - B_i to k = [x / eps] and report
    ``|| B_i(k) + (x_i - y_i) / eps + B_i(y - x) ||`` where B_i(y - x) is the
    ODE solution started from the residues at the anchors y.

    Returns ``(rows, failures)``: error rows per (eps, i) and a dict of
    flow aborts keyed by eps.
    """
    x_target = np.asarray(x_target, dtype=float).ravel()
    if len(x_target) != sys.n:
        raise ValidationError(f"target needs {sys.n} coordinates")
    y = cfg.anchors(sys)
    start = replace(sys, x=y)
    end = integrate(start, [y, y - x_target], step)
    rows, failures = [], {}
    for h in range(halvings + 1):
        eps = cfg.epsilon / 2 ** h
        k = lattice_target(x_target, eps)
        try:
            st = embed_divisors(sys, EmbeddingConfig(eps, tuple(y)), tol)
            out = divisor_flow(st, k, tol)
        except GenericityError as exc:
            failures[eps] = str(exc)
            continue
        for i in range(sys.n):
            # the lattice point is exact, so use k_i * eps in place of x_i
            err = out.B[i] + (k[i] * eps - y[i]) / eps * np.eye(sys.m) + end.B[i]
            rows.append(LimitRow(eps, i, float(np.linalg.norm(err))))
    return rows, failures


# ---------------------------------------------------------------------------
# Schlesinger transformations: continuous side

def series_first(sys: ContinuousSystem) -> np.ndarray:
    """Off-diagonal part of the first coefficient of the formal solution at infinity.

    From the order-one balance, (s_l - s_k) Y1_kl = (sum_k B_k)_kl.  The
    diagonal is not needed by the multiplier formulas and is set to zero.
    """
    if sys.B_inf is None:
        raise ValidationError("the formal series needs a diagonal B_inf")
    s = np.diag(sys.B_inf)
    S = sys.B.sum(axis=0)
    Y = np.zeros_like(S)
    for k in range(sys.m):
        for l in range(sys.m):
            if k != l:
                Y[k, l] = S[k, l] / (s[l] - s[k])
    return Y


def _eigvec(M, value):
    vals, vecs = np.linalg.eig(M)
    j = int(np.argmin(np.abs(vals - value)))
    v = vecs[:, j]
    return v / v[int(np.argmax(np.abs(v)))]


@dataclass(frozen=True, eq=False)
class ContinuousMove:
    """A continuous elementary Schlesinger transformation and its result."""

    system: ContinuousSystem
    R0: np.ndarray
    R1: np.ndarray
    pole: int
    row: int
    sign: int
    center: complex

    def R(self, zeta):
        """The multiplier at zeta."""
        m = len(self.R0)
        E, I = _unit(m, self.row), np.eye(m)
        d = zeta - self.center
        if self.sign > 0:
            return d * E + self.R0
        return I - E + self.R1.T / d

    def R_inv(self, zeta):
        m = len(self.R0)
        E, I = _unit(m, self.row), np.eye(m)
        d = zeta - self.center
        if self.sign > 0:
            return I - E + self.R1 / d
        return d * E + self.R0.T


def continuous_move(sys: ContinuousSystem, pole: int, eig: int, row: int, sign: int,
                    tol: Tolerances = DEFAULT) -> ContinuousMove:
    """Shift eigenvalue ``eig`` of residue ``pole`` by ``sign`` (+1 or -1).

    The exponent at infinity in position ``row`` moves the opposite way.
    ``eig`` indexes the sorted spectrum of the residue.
    """
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    if not (0 <= pole < sys.n and 0 <= row < sys.m and 0 <= eig < sys.m):
        raise ValidationError("pole, eigenvalue or row index out of range")
    t = sys.spectra()[pole][eig]
    Y1 = series_first(sys)
    M = sys.B[pole] if sign > 0 else sys.B[pole].T
    v = _eigvec(M, t)
    if abs(v[row]) <= tol.pivot:
        raise GenericityError(f"eigenvector coordinate {row} vanishes")
    R0, R1 = _multiplier_blocks(v, Y1 if sign > 0 else -Y1.T, row)
    x1 = sys.x[pole]
    E = _unit(sys.m, row)
    I = np.eye(sys.m)
    Bp = sys.B[pole]
    # residue at the moved pole of R B R^{-1} + R' R^{-1}
    rest = sys.B_inf + sum(sys.B[k] / (x1 - sys.x[k]) for k in range(sys.n) if k != pole)
    newB = np.empty_like(sys.B)
    for l in range(sys.n):
        if l == pole:
            if sign > 0:
                newB[l] = R0 @ rest @ R1 + E @ R1 + R0 @ Bp @ (I - E) + E @ Bp @ R1
            else:
                newB[l] = R1.T @ rest @ R0.T - R1.T @ E + (I - E) @ Bp @ R0.T + R1.T @ Bp @ E
        else:
            d = sys.x[l] - x1
            if sign > 0:
                newB[l] = (d * E + R0) @ sys.B[l] @ (I - E + R1 / d)
            else:
                newB[l] = (I - E + R1.T / d) @ sys.B[l] @ (d * E + R0.T)
    return ContinuousMove(replace(sys, B=newB), R0, R1, pole, row, sign, complex(x1))


def residue(func, center, radius, points=64) -> np.ndarray:
    """Residue of a matrix function at ``center`` by the trapezoidal rule on a circle."""
    th = 2 * np.pi * np.arange(points) / points
    zs = center + radius * np.exp(1j * th)
    return sum(func(z) * (z - center) for z in zs) / points


def transformed_residues(sys: ContinuousSystem, move: ContinuousMove, radius=None, points=64):
    """Residues of R B R^{-1} + R' R^{-1} at every pole, computed by contour integrals.

    Serves as an independent check of the closed-form transformed residues.
    """
    if radius is None:
        gaps = [abs(a - b) for a in sys.x for b in sys.x if a != b]
        radius = 0.25 * min(gaps) if gaps else 0.5
    h = 1e-5

    def Btilde(z):
        dR = (move.R(z + h) - move.R(z - h)) / (2 * h)
        Rinv = move.R_inv(z)
        return move.R(z) @ sys.coefficient(z) @ Rinv + dR @ Rinv

    return np.array([residue(Btilde, xk, radius, points) for xk in sys.x])


def unit_shift(sys: ContinuousSystem, pole: int, sign: int, tol: Tolerances = DEFAULT) -> ContinuousSystem:
    """Compose m continuous elementary moves shifting every eigenvalue of one residue.

    Eigenvalue j (in sorted order of the original spectrum) is paired with
    row j.  The result should be the residue plus sign times the identity.
    """
    cur = sys
    targets = sys.spectra()[pole]
    for j in range(sys.m):
        eig = int(np.argmin(np.abs(cur.spectra()[pole] - targets[j])))
        cur = continuous_move(cur, pole, eig, j, sign, tol).system
    return cur


# ---------------------------------------------------------------------------
# Schlesinger transformations: discrete side and the limit

@dataclass
class TransformLimitRow:
    epsilon: float
    index: int
    error: float
    block_R0: float
    block_R1: float


def discrete_move(sys: ContinuousSystem, eps: float, pole: int, eig: int, row: int, sign: int,
                  tol: Tolerances = DEFAULT):
    """Elementary transformation of the embedded difference system.

    Returns ``(multiplier, divisors)`` with the divisors of the transformed
    polynomial in pole order.
    """
    groups = embedded_groups(sys, sys.x, eps)
    B = [xk / eps * np.eye(sys.m) - Bk for xk, Bk in zip(sys.x, sys.B)]
    A = from_right_divisors(_leading(sys, eps), B, groups, tol)
    a = groups[pole][eig]
    if sign > 0:
        R, At = elementary_down(A, a, row, tol)
    else:
        R, At = elementary_up(A, a, row, tol)
    new_groups = groups.copy()
    new_groups[pole][eig] = a - sign
    Bt = np.array([right_divisor(At, g, tol) for g in new_groups])
    return R, Bt


def transform_limit_check(sys: ContinuousSystem, cfg: EmbeddingConfig, pole: int, eig: int, row: int,
                          sign: int, halvings: int = 3, tol: Tolerances = DEFAULT):
    """Compare the discrete and continuous elementary transformations as eps -> 0.

    For each eps = cfg.epsilon / 2**h the report has, per pole l, the error
    ``|| D Bt_l D^{-1} - x_l / eps + Bc_l ||`` with D = eps^(sign E_row),
    Bt the transformed divisors and Bc the transformed residues, together
    with the multiplier block errors of the scaled discrete blocks.
    """
    cont = continuous_move(sys, pole, eig, row, sign, tol)
    rows = []
    for h in range(halvings + 1):
        eps = cfg.epsilon / 2 ** h
        R, Bt = discrete_move(sys, eps, pole, eig, row, sign, tol)
        D = np.eye(sys.m, dtype=complex)
        D[row, row] = eps ** sign
        Dinv = np.linalg.inv(D)
        R0, R1 = R.data["R0"], R.data["R1"]
        if sign > 0:
            e0 = np.linalg.norm(D @ R0 - cont.R0)
            e1 = np.linalg.norm(eps * R1 @ Dinv - cont.R1)
        else:
            e0 = np.linalg.norm(R0 @ Dinv - cont.R0.T)
            e1 = np.linalg.norm(eps * D @ R1 - cont.R1.T)
        for l in range(sys.n):
            err = D @ Bt[l] @ Dinv - sys.x[l] / eps * np.eye(sys.m) + cont.system.B[l]
            rows.append(TransformLimitRow(eps, l, float(np.linalg.norm(err)), float(e0), float(e1)))
    return rows, cont


def step_consistency(sys: ContinuousSystem, eps: float, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Errors of one lattice step against eps times the ODE right-hand side.

    Entry [j, l] is || B_l(e_j) - B_l(0) + delta_lj I - eps dB_l/dx_j ||.
    """
    st = embed_divisors(sys, EmbeddingConfig(eps), tol)
    D = schlesinger_rhs(sys)
    out = np.zeros((sys.n, sys.n))
    for j in range(sys.n):
        k = [0] * sys.n
        k[j] = 1
        nxt = divisor_flow(st, k, tol)
        for l in range(sys.n):
            inc = nxt.B[l] - st.B[l] + (l == j) * np.eye(sys.m)
            out[j, l] = np.linalg.norm(inc - eps * D[j, l])
    return out

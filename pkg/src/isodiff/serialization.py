"""JSON and CSV exchange formats.

Complex entries are objects {"re": x, "im": y}; matrices are row-major
nested arrays of such entries; polynomials are {"m", "n", "coeffs"} with
coefficients highest degree first.  Floats are written with 17 significant
digits so that every double round-trips.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .config import DEFAULT, Tolerances
from .continuum import ContinuousSystem
from .errors import ValidationError
from .flows import DivisorState, FactorState, b_from_c, c_from_b
from .matpoly import (
    MatrixPolynomial,
    check_leading,
    check_noncongruent,
    default_groups,
    sort_values,
)
from .refactor import Twist


# ---------------------------------------------------------------------------
# text encoding

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValidationError(f"cannot serialize non-finite value {x}")
    if x == 0:
        return "0.0"
    return "%.17g" % x


def dumps(obj, indent: int | None = 1) -> str:
    """Deterministic JSON text with 17 significant digits for floats."""
    out = []

    def emit(o, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                out.append("{}")
                return
            out.append("{")
            for t, (k, v) in enumerate(o.items()):
                out.append(("," if t else "") + pad + json.dumps(str(k)) + ": ")
                emit(v, level + 1)
            out.append(end + "}")
        elif isinstance(o, (list, tuple)):
            if not o:
                out.append("[]")
                return
            # short numeric rows stay on one line
            flat = all(not isinstance(v, (dict, list, tuple)) for v in o)
            out.append("[")
            for t, v in enumerate(o):
                out.append(("," if t else "") + ("" if flat else pad))
                emit(v, level + 1)
            out.append(("" if flat else end) + "]")
        elif isinstance(o, (bool, np.bool_)):
            out.append("true" if o else "false")
        elif o is None:
            out.append("null")
        elif isinstance(o, (int, np.integer)):
            out.append(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            out.append(_fmt_float(float(o)))
        elif isinstance(o, (complex, np.complexfloating)):
            emit(encode_complex(o), level)
        elif isinstance(o, np.ndarray):
            emit(encode_array(o), level)
        elif isinstance(o, str):
            out.append(json.dumps(o))
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj, 0)
    return "".join(out) + "\n"


def encode_complex(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def decode_complex(obj) -> complex:
    if isinstance(obj, dict):
        try:
            return complex(float(obj["re"]), float(obj.get("im", 0.0)))
        except (KeyError, TypeError, ValueError):
            raise ValidationError(f"bad complex entry {obj!r}") from None
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    raise ValidationError(f"bad complex entry {obj!r}")


def encode_array(a):
    """Nested lists of complex entries (any rank)."""
    a = np.asarray(a)
    if a.ndim == 0:
        return encode_complex(a)
    return [encode_array(x) for x in a]


def decode_array(obj) -> np.ndarray:
    if isinstance(obj, list):
        parts = [decode_array(x) for x in obj]
        shapes = {p.shape for p in parts}
        if len(shapes) > 1:
            raise ValidationError("ragged array")
        return np.array(parts, dtype=complex)
    return np.array(decode_complex(obj))


def decode_matrix(obj, m=None, name="matrix") -> np.ndarray:
    M = decode_array(obj)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or (m is not None and M.shape[0] != m):
        raise ValidationError(f"{name} must be a {m or 'square'}x{m or ''} matrix")
    return M


def encode_poly(P: MatrixPolynomial) -> dict:
    return {"m": P.m, "n": P.n, "coeffs": encode_array(P.coeffs)}


def decode_poly(obj) -> MatrixPolynomial:
    try:
        m, n, coeffs = int(obj["m"]), int(obj["n"]), decode_array(obj["coeffs"])
    except (KeyError, TypeError):
        raise ValidationError("polynomial needs m, n and coeffs") from None
    if coeffs.shape != (n + 1, m, m):
        raise ValidationError(f"coeffs must have shape ({n + 1}, {m}, {m})")
    return MatrixPolynomial(coeffs)


# ---------------------------------------------------------------------------
# system configurations

REPRESENTATIONS = ("coefficients", "divisors", "factors")


@dataclass(eq=False)
class SystemConfig:
    """A difference system given by A0 and one of three representations.

    ``coefficients`` holds A_1..A_n, ``divisors`` B_1..B_n (right divisors)
    and ``factors`` C_1..C_n with A = A0 (z - C_1) .. (z - C_n).
    """

    m: int
    n: int
    A0: np.ndarray
    representation: str
    data: np.ndarray
    groups: np.ndarray | None = None
    variant: str = "difference"
    seed: int | None = None
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A0 = np.asarray(self.A0, dtype=complex)
        self.data = np.asarray(self.data, dtype=complex)
        if self.representation not in REPRESENTATIONS:
            raise ValidationError(f"unknown representation {self.representation!r}")
        if self.A0.shape != (self.m, self.m) or self.data.shape != (self.n, self.m, self.m):
            raise ValidationError("dimensions of A0 and the matrices do not match m and n")
        if self.groups is not None:
            self.groups = np.asarray(self.groups, dtype=complex)
            if self.groups.shape != (self.n, self.m):
                raise ValidationError(f"groups must have shape ({self.n}, {self.m})")
        Twist.parse(self.variant)
        unknown = set(self.tolerances) - {f.name for f in fields(Tolerances)}
        if unknown:
            raise ValidationError(f"unknown tolerance fields {sorted(unknown)}")

    @property
    def twist(self) -> Twist:
        return Twist.parse(self.variant)

    def tol(self, **overrides) -> Tolerances:
        return DEFAULT.updated(**{**self.tolerances, **overrides})

    def polynomial(self) -> MatrixPolynomial:
        if self.representation == "coefficients":
            return MatrixPolynomial(np.concatenate([self.A0[None], self.data]))
        return self.divisor_state().polynomial(self.tol())

    def _groups(self, mats):
        if self.groups is not None:
            return self.groups
        return np.array([sort_values(np.linalg.eigvals(X)) for X in mats])

    def validate(self, tol: Tolerances | None = None):
        """Load-time checks: invertible A0 and pairwise non-congruent eigenvalues."""
        tol = tol or self.tol()
        check_leading(self.A0, tol)
        if self.representation == "coefficients":
            groups = self.groups if self.groups is not None else default_groups(self.polynomial(), tol)
        else:
            groups = self._groups(self.data)
        check_noncongruent(groups, tol, self.twist.congruence_q)
        return groups

    def divisor_state(self, tol: Tolerances | None = None) -> DivisorState:
        tol = tol or self.tol()
        if self.representation == "divisors":
            return DivisorState(self.A0, self.data, self._groups(self.data), twist=self.twist)
        if self.representation == "factors":
            return b_from_c(self.factor_state(tol), (0,) * self.n, tol)
        return DivisorState.from_polynomial(self.polynomial(), self.groups, self.twist, tol)

    def factor_state(self, tol: Tolerances | None = None) -> FactorState:
        tol = tol or self.tol()
        if self.representation == "factors":
            return FactorState(self.A0, self.data, self._groups(self.data), twist=self.twist)
        if self.representation == "divisors":
            return c_from_b(self.divisor_state(tol), (0,) * self.n, tol)
        return FactorState.from_polynomial(self.polynomial(), self.groups, self.twist, tol)

    def to_json(self) -> dict:
        obj = {"m": self.m, "n": self.n, "variant": self.variant, "A0": encode_array(self.A0),
               self.representation: encode_array(self.data)}
        if self.groups is not None:
            obj["groups"] = encode_array(self.groups)
        if self.seed is not None:
            obj["seed"] = self.seed
        if self.tolerances:
            obj["tolerances"] = dict(self.tolerances)
        return obj

    @classmethod
    def from_json(cls, obj) -> "SystemConfig":
        if not isinstance(obj, dict):
            raise ValidationError("system file must hold a JSON object")
        present = [r for r in REPRESENTATIONS if r in obj]
        if len(present) != 1:
            raise ValidationError("exactly one of coefficients, divisors, factors is required")
        rep = present[0]
        try:
            m, n = int(obj["m"]), int(obj["n"])
        except (KeyError, TypeError, ValueError):
            raise ValidationError("m and n are required integers") from None
        data = decode_array(obj[rep])
        if "A0" not in obj:
            raise ValidationError("A0 is required")
        A0 = decode_matrix(obj["A0"], m, "A0")
        groups = decode_array(obj["groups"]) if "groups" in obj else None
        return cls(m, n, A0, rep, data, groups, obj.get("variant", "difference"),
                   obj.get("seed"), dict(obj.get("tolerances", {})))

    @classmethod
    def from_state(cls, state, variant=None, seed=None) -> "SystemConfig":
        if isinstance(state, DivisorState):
            rep, data, twist = "divisors", state.B, state.twist
        else:
            rep, data, twist = "factors", state.C, state.twist
        return cls(state.m, state.n, state.A0, rep, data, state.spectra(),
                   variant or str(twist), seed)


def continuous_to_json(sys: ContinuousSystem, y=None) -> dict:
    obj = {"kind": "continuous", "m": sys.m, "n": sys.n, "x": encode_array(sys.x), "B": encode_array(sys.B)}
    if sys.B_inf is not None:
        obj["B_inf"] = encode_array(sys.B_inf)
    if y is not None:
        obj["y"] = encode_array(np.asarray(y))
    return obj


def continuous_from_json(obj):
    """Returns (system, anchors or None)."""
    try:
        x, B = decode_array(obj["x"]), decode_array(obj["B"])
    except (KeyError, TypeError):
        raise ValidationError("continuous system needs x and B") from None
    m, n = int(obj.get("m", B.shape[-1])), int(obj.get("n", len(x)))
    if B.shape != (n, m, m) or x.shape != (n,):
        raise ValidationError("continuous system dimensions do not match m and n")
    Binf = decode_matrix(obj["B_inf"], m, "B_inf") if obj.get("B_inf") is not None else None
    y = decode_array(obj["y"]) if "y" in obj else None
    return ContinuousSystem(x, B, Binf), y


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def unwrap_system(obj):
    """Outputs of ``run`` and ``transform`` embed their system under "system"."""
    if isinstance(obj, dict) and isinstance(obj.get("system"), dict):
        return obj["system"]
    return obj


def load_system(path) -> SystemConfig:
    return SystemConfig.from_json(unwrap_system(load_json(path)))


def save_system(cfg: SystemConfig, path):
    with open(path, "w") as fh:
        fh.write(dumps(cfg.to_json()))


# ---------------------------------------------------------------------------
# trajectories

def trajectory_json(states, residuals=None) -> list:
    """[{k, B, residuals}] for a list of divisor or factor states."""
    out = []
    for s in states:
        point = s.k if isinstance(s, DivisorState) else s.l
        mats = s.B if isinstance(s, DivisorState) else s.C
        entry = {"k": list(point), "B" if isinstance(s, DivisorState) else "C": encode_array(mats)}
        if residuals is not None:
            entry["residuals"] = residuals.get(tuple(point), {})
        out.append(entry)
    return out


def trajectory_csv(states) -> str:
    """One row per matrix entry per lattice point."""
    if not states:
        return ""
    n = states[0].n
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"k{i + 1}" for i in range(n)] + ["block", "row", "col", "re", "im"])
    for s in states:
        point = s.k if isinstance(s, DivisorState) else s.l
        mats = s.B if isinstance(s, DivisorState) else s.C
        for b, M in enumerate(mats):
            for r in range(M.shape[0]):
                for c in range(M.shape[1]):
                    z = M[r, c]
                    w.writerow(list(point) + [b, r, c, _fmt_float(z.real), _fmt_float(z.imag)])
    return buf.getvalue()


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()

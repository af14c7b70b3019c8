"""Acceptance criteria at desk scale.

Each test prints one PASS/FAIL line with the worst measured value; the
lines are repeated in the terminal summary.  Scale: m, n in {2, 3},
|k|_inf <= 3, 20 seeds per suite unless stated otherwise.
"""
import itertools

import numpy as np
import pytest

from isodiff.continuum import (
    EmbeddingConfig,
    limit_compare,
    transform_limit_check,
    unit_shift,
)
from isodiff.flows import (
    b_from_c,
    c_from_b,
    check_residuals,
    divisor_flow,
    divisor_path,
    factor_flow,
    group_shift_kappa,
    schlesinger_action,
    spectral_curve,
    spectrum_error,
)
from isodiff.generate import random_continuous, random_state
from isodiff.matpoly import (
    eigenvalues,
    factor_from_left,
    formal_exponents,
    formal_series,
    from_right_divisors,
    match_spectrum,
    product,
    right_divisor,
    series_residual,
)
from isodiff.refactor import (
    Twist,
    exchange_residual,
    flow_F,
    product_residual,
    swap_adjacent,
    swap_adjacent_2x2,
    swap_via_eigen,
    telescope_residual,
)

from conftest import ACCEPTANCE_LINES

SEEDS = range(20)
SIZES = [(2, 2), (2, 3), (3, 2), (3, 3)]


def size(seed):
    return SIZES[seed % len(SIZES)]


def record(num, title, checks):
    """checks: (label, worst value, upper bound) or (label, value, low, high)."""
    parts, ok = [], True
    for c in checks:
        if len(c) == 3:
            label, v, hi = c
            good = v <= hi
            parts.append(f"{label} {v:.2e} <= {hi:.0e}")
        else:
            label, v, lo, hi = c
            good = lo <= v <= hi
            parts.append(f"{label} {v:.3g} in [{lo:g}, {hi:g}]")
        ok = ok and good
    line = f"{'PASS' if ok else 'FAIL'}  criterion {num:2d}  {title}: {'; '.join(parts)}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def rel(X, Y):
    return float(np.abs(np.asarray(X) - np.asarray(Y)).max() / (1 + np.abs(Y).max()))


def lattice_points(n, radius, rng, count):
    pts = [tuple(rng.integers(-radius, radius + 1, n)) for _ in range(count)]
    pts += [(radius,) * n, (-radius,) * n]
    return pts


# ---------------------------------------------------------------------------

def test_01_refactorization_routes():
    agree, prod = 0.0, 0.0
    for seed in SEEDS:
        m, _ = size(seed)
        s = random_state(seed, m, 2)
        X, Y = s.B
        S, T = swap_adjacent(X, Y)
        S2, T2 = swap_via_eigen(X, Y)
        agree = max(agree, rel(S, S2), rel(T, T2))
        routes = [(S, T), (S2, T2)]
        if m == 2:
            S3, T3 = swap_adjacent_2x2(X, Y)
            agree = max(agree, rel(S, S3), rel(T, T3))
            routes.append((S3, T3))
        for a, b in routes:
            prod = max(prod, product_residual([X, Y], [a, b]))
    record(1, "refactorization routes", [("route disagreement", agree, 1e-8), ("product identity", prod, 1e-9)])


def test_02_reconstruction():
    worst = 0.0
    for seed in SEEDS:
        m, n = size(seed)
        s = random_state(seed, m, n)
        A = s.polynomial()
        divs = [right_divisor(A, g) for g in s.groups]
        back = from_right_divisors(A.leading, divs, s.groups)
        worst = max(worst, (back - A).norm() / A.norm())
        C = factor_from_left(A, s.groups)
        worst = max(worst, (product(C, A.leading) - A).norm() / A.norm())
    record(2, "reconstruction", [("relative error", worst, 1e-8)])


def _balanced(rng, m, n):
    kappa = rng.integers(-1, 2, m * n)
    delta = rng.integers(-1, 2, m)
    delta[0] -= kappa.sum() + delta.sum()
    return kappa, delta


def test_03_transformation_certificates():
    roots_e = exps_e = lead_e = order_e = 0.0
    for seed in SEEDS:
        m, n = size(seed)
        s = random_state(seed, m, n)
        A = s.polynomial()
        rng = np.random.default_rng(1000 + seed)
        kappa, delta = _balanced(rng, m, n)
        roots = s.groups.ravel()
        d0 = formal_exponents(A)
        res = schlesinger_action(A, kappa, delta, roots=roots)
        roots_e = max(roots_e, match_spectrum(eigenvalues(res.A), roots + kappa)[1])
        exps_e = max(exps_e, float(np.abs(formal_exponents(res.A) - d0 - delta).max()))
        lead_e = max(lead_e, float(np.abs(res.A.leading - A.leading).max()))
        other = schlesinger_action(A, kappa, delta, roots=roots, seed=seed + 1)
        order_e = max(order_e, (other.A - res.A).norm() / res.A.norm())
    record(3, "transformation certificates", [
        ("root shift", roots_e, 1e-6), ("exponent shift", exps_e, 1e-8),
        ("leading change", lead_e, 1e-12), ("order dependence", order_e, 1e-7)])


def test_04_unit_group_shift_multiplier():
    worst = 0.0
    for seed in SEEDS:
        m, n = size(seed)
        s = random_state(seed, m, n)
        A = s.polynomial()
        roots = eigenvalues(A)
        i = seed % n
        kappa = group_shift_kappa(roots, s.groups, np.eye(n, dtype=int)[i])
        R = schlesinger_action(A, kappa, [1] * m, roots, with_multiplier=True).multiplier.reduced()
        if R.num.n != 1 or R.den:
            worst = np.inf
            continue
        R0 = np.linalg.solve(R.num.coeffs[0], R.num.coeffs[1])
        worst = max(worst, float(np.linalg.norm(R0 + s.B[i])))
    record(4, "unit group shift multiplier", [("||R0 + B_i||", worst, 1e-8)])


def test_05_lattice_equations():
    resid = spectra = 0.0
    for seed in SEEDS:
        m, n = size(seed)
        s = random_state(seed, m, n)
        rng = np.random.default_rng(2000 + seed)
        # a unit box at a random corner inside |k| <= 3
        corner = tuple(rng.integers(-3, 3, n))
        box = {}
        for off in itertools.product((0, 1), repeat=n):
            k = tuple(c + o for c, o in zip(corner, off))
            box[k] = divisor_flow(s, k)
        rep = check_residuals(box, polynomial_steps=True)
        spectra = max(spectra, rep.pop("spectra"))
        resid = max(resid, max(rep.values()))
        # a full trajectory to a random target
        path = divisor_path(s, tuple(rng.integers(-3, 4, n)))
        for a, b in zip(path[:-1], path[1:]):
            rep = check_residuals({a.k: a, b.k: b}, polynomial_steps=True)
            spectra = max(spectra, rep.pop("spectra"))
            resid = max(resid, max(rep.values()))
    record(5, "difference Schlesinger equations", [("equation residual", resid, 1e-8),
                                                    ("spectra law", spectra, 1e-6)])


def test_06_route_equivalence():
    worst = 0.0
    for seed in SEEDS:
        m, n = size(seed)
        s = random_state(seed, m, n)
        f = c_from_b(s, (0,) * n)
        for k in itertools.product(range(-3, 4), repeat=n):
            worst = max(worst, rel(divisor_flow(s, k).B, b_from_c(f, k).B))
    record(6, "route equivalence", [("divisor vs factor route", worst, 1e-7)])


def test_07_commutativity_and_telescope():
    comm = exch = tele = add = 0.0
    for seed in SEEDS:
        m, n = size(seed)
        s = random_state(seed, m, n)
        seq = c_from_b(s, (0,) * n).sequence()
        for i, j in itertools.combinations(range(1, n + 1), 2):
            a = flow_F(flow_F(seq, i), j).base
            b = flow_F(flow_F(seq, j), i).base
            comm = max(comm, float(np.abs(a - b).max()))
            exch = max(exch, exchange_residual(seq, i, j))
        tele = max(tele, max(telescope_residual(seq, l) for l in range(1, n + 1)))
        rng = np.random.default_rng(4000 + seed)
        k1, k2 = tuple(rng.integers(-2, 2, n)), tuple(rng.integers(-1, 2, n))
        ab = divisor_flow(divisor_flow(s, k1), np.add(k1, k2))
        add = max(add, rel(ab.B, divisor_flow(s, np.add(k1, k2)).B))
    record(7, "commutativity and telescoping", [
        ("flow commutator", comm, 1e-8), ("exchange identity", exch, 1e-9),
        ("telescope", tele, 1e-10), ("additivity", add, 1e-7)])


@pytest.mark.parametrize("phase", [False, True], ids=["q-real", "q-phase"])
def test_08_q_variant(phase):
    conj = spec = 0.0
    for seed in SEEDS:
        m, n = size(seed)
        rng = np.random.default_rng(5000 + seed)
        q = 0.7 * (np.exp(1j * rng.uniform(0, 2 * np.pi)) if phase else 1.0)
        s = random_state(seed, m, n, Twist("q", q))
        one = divisor_flow(s, (1,) * n)
        for X, Y in zip(s.B, one.B):
            conj = max(conj, rel(Y, np.linalg.solve(s.A0, X @ s.A0) / q))
        for k in lattice_points(n, 3, rng, 4):
            out = divisor_flow(s, k)
            for i in range(n):
                g = s.groups[i] * q ** (-k[i])
                spec = max(spec, spectrum_error(out.B[i], g) / (1 + np.abs(g).max()))
    label = "q = 0.7 with random phase" if phase else "q = 0.7"
    record(8, f"q-variant ({label})", [("one-step conjugation", conj, 1e-10), ("spectral scaling", spec, 1e-6)])


def test_09_autonomous_variant():
    spec = curve = 0.0
    for seed in SEEDS:
        m, n = size(seed)
        s = random_state(seed, m, n, Twist("autonomous"))
        f = c_from_b(s, (0,) * n)
        ref = spectral_curve(f.polynomial())
        scale = np.abs(ref).max()
        state = f
        for step in range(100):
            l = list(state.l)
            l[step % n] += 1
            state = factor_flow(state, l)
            if step % 10 == 9:
                curve = max(curve, float(np.abs(spectral_curve(state.polynomial()) - ref).max() / scale))
        for i in range(n):
            spec = max(spec, spectrum_error(state.C[i], s.groups[i]) / (1 + np.abs(s.groups[i]).max()))
    record(9, "autonomous variant", [("spectra drift", spec, 1e-8), ("spectral curve drift", curve, 1e-8)])


def test_10_continuum_limit_rate():
    ratios = []
    for seed in range(5):
        sys = random_continuous(seed, 2, 2)
        rows, failures = limit_compare(sys, EmbeddingConfig(0.1), [0.2, 0.1], halvings=3)
        assert not failures, failures
        eps = sorted({r.epsilon for r in rows}, reverse=True)
        err = [np.hypot(*[r.error for r in rows if r.epsilon == e]) for e in eps]
        ratios += [a / b for a, b in zip(err, err[1:])]
    record(10, "continuum limit rate (empirical)", [
        ("smallest error ratio", min(ratios), 1.6, 2.4), ("largest error ratio", max(ratios), 1.6, 2.4)])


def test_11_continuous_transformations():
    shift = 0.0
    nonmono = 0
    for seed in SEEDS:
        m, n = size(seed)
        sys = random_continuous(seed, m, n)
        for sign in (1, -1):
            p = seed % n
            out = unit_shift(sys, p, sign)
            for l in range(n):
                exp = sys.B[l] + (sign if l == p else 0) * np.eye(m)
                shift = max(shift, float(np.abs(out.B[l] - exp).max()))
    for seed in range(5):
        sys = random_continuous(seed, 2, 2)
        rng = np.random.default_rng(7000 + seed)
        pole, eig, row = (int(v) for v in rng.integers(0, 2, 3))
        sign = int(rng.choice([1, -1]))
        rows, _ = transform_limit_check(sys, EmbeddingConfig(0.1), pole, eig, row, sign, halvings=3)
        eps = sorted({r.epsilon for r in rows}, reverse=True)
        series = [[r.error for r in rows if r.index == l] for l in range(2)]
        series.append([next(r.block_R0 for r in rows if r.epsilon == e) for e in eps])
        series.append([next(r.block_R1 for r in rows if r.epsilon == e) for e in eps])
        for vals in series:
            nonmono += sum(b >= a for a, b in zip(vals, vals[1:]))
    record(11, "continuous Schlesinger transformations", [
        ("unit shift rule", shift, 1e-9), ("non-decreasing error steps", float(nonmono), 0.0)])


def test_12_formal_series_order():
    worst_ratio = np.inf
    for seed in SEEDS:
        m, n = size(seed)
        A = random_state(seed, m, n).polynomial()
        sol = formal_series(A, 3)
        r3, r4 = series_residual(A, sol, 1e3), series_residual(A, sol, 1e4)
        worst_ratio = min(worst_ratio, r3 / r4)
    record(12, "formal series truncation order", [("smallest residual ratio", worst_ratio, 500, np.inf)])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isodiff.errors import GenericityError, ValidationError
from isodiff.flows import c_from_b
from isodiff.generate import random_state
from isodiff.matpoly import match_spectrum, product
from isodiff.refactor import (
    FactorSequence,
    Twist,
    conjugation_residuals,
    exchange_residual,
    flow_F,
    inverse_flow_F,
    permute_product,
    pi_action,
    product_residual,
    swap_adjacent,
    swap_adjacent_2x2,
    swap_via_eigen,
    telescope_residual,
)

from conftest import cmat

X_EX = np.array([[1.0, 1.0], [0.0, 2.0]])
Y_EX = np.array([[3.0, 0.0], [1.0, 4.0]])


def random_pair(seed, m):
    rng = np.random.default_rng(seed)
    return cmat(rng, m), cmat(rng, m) + 3 * np.eye(m)


def sequence(seed, m, n, variant="difference"):
    state = random_state(seed, m, n, Twist.parse(variant))
    return c_from_b(state, [0] * n).sequence()


def spectrum_err(M, ref):
    return match_spectrum(np.linalg.eigvals(M), np.linalg.eigvals(ref))[1]


# --- single exchange --------------------------------------------------------

def test_swap_scalar():
    S, T = swap_adjacent([[0.0]], [[1.0]])
    assert np.allclose(S, 1) and np.allclose(T, 0)


def test_swap_commuting_diagonal():
    X, Y = np.diag([1.0, 2.0]), np.diag([5.0, 6.0])
    for swap in (swap_adjacent, swap_adjacent_2x2, swap_via_eigen):
        S, T = swap(X, Y)
        assert np.allclose(S, Y) and np.allclose(T, X)


def test_swap_matches_closed_form_example():
    S, T = swap_adjacent(X_EX, Y_EX)
    S2, T2 = swap_adjacent_2x2(X_EX, Y_EX)
    assert np.abs(S - S2).max() <= 1e-10 and np.abs(T - T2).max() <= 1e-10
    assert product_residual([X_EX, Y_EX], [S, T]) <= 1e-12


def test_swap_closed_form_nilpotent_case():
    X = np.array([[0.5, 1.0], [2.0, -0.5]])      # traceless
    Y = 2 * np.eye(2) + np.array([[0.0, 0.3], [0.0, 0.0]])
    S, T = swap_adjacent_2x2(X, Y)
    assert product_residual([X, Y], [S, T]) <= 1e-10


def test_swap_overlapping_spectra():
    with pytest.raises(GenericityError):
        swap_adjacent(np.diag([1.0, 2.0]), np.diag([2.0, 3.0]))


def test_swap_via_eigen_scalar():
    S, T = swap_via_eigen([[0.3j]], [[-1.2]])
    assert np.isclose(S[0, 0], -1.2) and np.isclose(T[0, 0], 0.3j)


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_swap_product_and_spectra(seed, m):
    X, Y = random_pair(seed, m)
    S, T = swap_adjacent(X, Y)
    assert product_residual([X, Y], [S, T]) <= 1e-9
    assert spectrum_err(S, Y) <= 1e-7 and spectrum_err(T, X) <= 1e-7
    assert conjugation_residuals(X, Y, S, T) <= 1e-9


@given(st.integers(0, 10_000))
def test_swap_routes_agree_2x2(seed):
    X, Y = random_pair(seed, 2)
    S, T = swap_adjacent(X, Y)
    S2, T2 = swap_adjacent_2x2(X, Y)
    assert max(np.abs(S - S2).max(), np.abs(T - T2).max()) <= 1e-10 * (1 + np.abs(S).max())


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_swap_routes_agree_eigen(seed, m):
    X, Y = random_pair(seed, m)
    S, T = swap_adjacent(X, Y)
    S2, T2 = swap_via_eigen(X, Y)
    assert max(np.abs(S - S2).max(), np.abs(T - T2).max()) <= 1e-8 * (1 + np.abs(S).max())


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_swap_twice_is_identity(seed, m):
    X, Y = random_pair(seed, m)
    S, T = swap_adjacent(X, Y)
    X2, Y2 = swap_adjacent(S, T)
    assert np.abs(X2 - X).max() <= 1e-8 and np.abs(Y2 - Y).max() <= 1e-8


# --- permutations -----------------------------------------------------------

def test_permute_identity_and_transposition(rng):
    F = [cmat(rng, 2) + 3 * k * np.eye(2) for k in range(3)]
    out = permute_product(F, [0, 1, 2])
    assert all(np.allclose(a, b) for a, b in zip(out, F))
    S, T = swap_adjacent(F[0], F[1])
    out = permute_product(F[:2], [1, 0])
    assert np.allclose(out[1], S) and np.allclose(out[0], T)


def test_permute_diagonal_reversal():
    F = [np.diag([1.0, 2.0]), np.diag([5.0, 7.0]), np.diag([11.0, 13.0])]
    out = permute_product(F, [2, 1, 0])
    assert all(np.allclose(a, b) for a, b in zip(out, F))


def test_permute_rejects_non_permutation(rng):
    with pytest.raises(ValidationError):
        permute_product([cmat(rng, 2)] * 2, [0, 0])


@pytest.mark.parametrize("seed", range(5))
def test_permute_all_sigma(seed):
    rng = np.random.default_rng(seed)
    F = [cmat(rng, 2) + 2.5 * k * np.eye(2) for k in range(3)]
    for sigma in itertools.permutations(range(3)):
        Y = permute_product(F, sigma)
        assert product_residual(F, [Y[t] for t in sigma]) <= 1e-9
        for k in range(3):
            assert spectrum_err(Y[k], F[k]) <= 1e-7
        # the result does not depend on the reduced word
        Z = permute_product(F, sigma, strategy="selection")
        assert max(np.abs(a - b).max() for a, b in zip(Y, Z)) <= 1e-7


# --- sequence flows ---------------------------------------------------------

def test_flow_n1_rule(rng):
    A0 = np.diag([1.5, 0.7j])
    C = cmat(rng, 2)
    seq = FactorSequence([C], A0)
    out = flow_F(seq, 1).base[0]
    assert np.abs(out - (np.linalg.solve(A0, C @ A0) - np.eye(2))).max() <= 1e-12
    back = inverse_flow_F(seq, 1).base[0]
    assert np.abs(back - (A0 @ C @ np.linalg.inv(A0) + np.eye(2))).max() <= 1e-12


def test_flow_period_in_label():
    seq = sequence(1, 2, 3)
    a, b = flow_F(seq, 1), flow_F(seq, 4)
    assert np.abs(a.base - b.base).max() <= 1e-14


def test_twist_factor_relation():
    seq = sequence(2, 2, 2)
    A0 = seq.A0
    for k in range(-2, 3):
        rhs = np.eye(2) + A0 @ seq.factor(k) @ np.linalg.inv(A0)
        assert np.abs(seq.factor(k + 2) - rhs).max() <= 1e-10


@pytest.mark.parametrize("variant", ["difference", "q=2.5", "autonomous"])
@pytest.mark.parametrize("m,n", [(1, 2), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_flow_round_trip(variant, m, n):
    seq = sequence(3, m, n, variant)
    for l in range(1, n + 1):
        back = inverse_flow_F(flow_F(seq, l), l)
        assert np.abs(back.base - seq.base).max() <= 1e-10 * (1 + np.abs(seq.base).max())


@pytest.mark.parametrize("variant", ["difference", "q=2.5", "autonomous"])
@pytest.mark.parametrize("m,n", [(1, 2), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_flow_preserves_product_and_types(variant, m, n):
    seq = sequence(4, m, n, variant)
    for l in range(1, n + 1):
        out = flow_F(seq, l)
        # window l..l+n-1 of seq equals window l+1..l+n of out
        assert product_residual(seq.window(l, n), out.window(l + 1, n)) <= 1e-9
        # the factor moved to the end of the window keeps its type
        assert spectrum_err(out.factor(l + n), seq.factor(l)) <= 1e-7


@pytest.mark.parametrize("m,n", [(1, 2), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_flows_commute(m, n):
    for seed in range(4):
        seq = sequence(seed, m, n)
        for i, j in itertools.combinations(range(1, n + 1), 2):
            a = flow_F(flow_F(seq, i), j)
            b = flow_F(flow_F(seq, j), i)
            assert np.abs(a.base - b.base).max() <= 1e-8 * (1 + np.abs(a.base).max())


@pytest.mark.parametrize("variant", ["difference", "q=2.5", "autonomous"])
@pytest.mark.parametrize("m,n", [(2, 2), (2, 3), (3, 3)])
def test_telescoping_composite(variant, m, n):
    seq = sequence(5, m, n, variant)
    for l in range(1, n + 1):
        assert telescope_residual(seq, l) <= 1e-10 * (1 + np.abs(seq.base).max())


@pytest.mark.parametrize("m,n", [(2, 2), (2, 3), (3, 3)])
def test_exchange_identity(m, n):
    for seed in range(3):
        seq = sequence(seed, m, n)
        for i in range(1, n + 1):
            for j in range(i + 1, i + n):
                assert exchange_residual(seq, i, j) <= 1e-9


def test_inverse_commutes_with_other_flow():
    seq = sequence(6, 2, 3)
    a = inverse_flow_F(flow_F(seq, 2), 1)
    b = flow_F(inverse_flow_F(seq, 1), 2)
    assert np.abs(a.base - b.base).max() <= 1e-8


def test_autonomous_periodic_when_identity_leading():
    seq = sequence(7, 2, 2, "autonomous")
    seq = FactorSequence(seq.base, np.eye(2), Twist("autonomous"))
    assert np.allclose(seq.factor(3), seq.factor(1))


# --- permutation action on sequences ---------------------------------------

def test_pi_identity():
    seq = sequence(8, 2, 3)
    assert np.allclose(pi_action(seq, [0, 1, 2]).base, seq.base)


def test_pi_diagonal_swap():
    seq = FactorSequence([np.diag([1.0, 2.0]), np.diag([5.0, 7.0])], np.diag([1.0, 2.0]))
    out = pi_action(seq, [1, 0])
    assert np.allclose(out.base[0], seq.base[1]) and np.allclose(out.base[1], seq.base[0])


@pytest.mark.parametrize("sigma", list(itertools.permutations(range(3))))
def test_pi_general(sigma):
    seq = sequence(9, 2, 3)
    out = pi_action(seq, sigma)
    assert product_residual(list(seq.base), list(out.base)) <= 1e-9
    for k in range(3):
        assert spectrum_err(out.base[sigma[k]], seq.base[k]) <= 1e-7
    # twist stability: one period later the same relation holds
    assert product_residual(seq.window(4, 3), out.window(4, 3)) <= 1e-9


def test_polynomial_of_sequence():
    seq = sequence(10, 2, 2)
    P = seq.polynomial()
    assert (P - product(list(seq.base), seq.A0)).norm() == 0


def test_twist_parse():
    assert Twist.parse("q=2").q == 2 and str(Twist.parse("autonomous")) == "autonomous"
    with pytest.raises(ValidationError):
        Twist.parse("q=1")
    with pytest.raises(ValidationError):
        Twist.parse("bogus")

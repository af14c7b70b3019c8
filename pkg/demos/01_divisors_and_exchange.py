import numpy as np

from isodiff import generate, matpoly, refactor

# A random 2x2 quadratic matrix polynomial, built from two linear divisors
# whose spectra are well separated.
state = generate.random_state(seed=1, m=2, n=2)
A = state.polynomial()
print("roots of det A(z):", np.round(matpoly.sort_values(matpoly.eigenvalues(A)), 4))

# Any m of the 2m roots with independent kernel vectors pick out a right
# divisor z - B, and the divisors rebuild the polynomial.
for g in state.groups:
    B = matpoly.right_divisor(A, g)
    print("group", np.round(g, 3), " divisor residual", f"{matpoly.verify_divisor(A, B):.1e}")
back = matpoly.from_right_divisors(A.leading, [matpoly.right_divisor(A, g) for g in state.groups])
print("rebuilt polynomial, relative error", f"{(back - A).norm() / A.norm():.1e}")

# Exchanging two linear factors keeps the product and swaps the spectra.
X, Y = state.B
S, T = refactor.swap_adjacent(X, Y)
print("\nexchange (z-X)(z-Y) = (z-S)(z-T)")
print("  product residual", f"{refactor.product_residual([X, Y], [S, T]):.1e}")
print("  Sp(S) =", np.round(np.sort_complex(np.linalg.eigvals(S)), 4), " Sp(Y) =", np.round(np.sort_complex(np.linalg.eigvals(Y)), 4))

# Three routes to the same exchange: Sylvester equation, kernel vectors of
# the quadratic, and the 2x2 conjugation formula.
S2, T2 = refactor.swap_via_eigen(X, Y)
S3, T3 = refactor.swap_adjacent_2x2(X, Y)
print("  route disagreement", f"{max(np.abs(S - S2).max(), np.abs(S - S3).max()):.1e}")

# The formal solution at infinity: exponents and the first series terms.
sol = matpoly.formal_series(A, 3)
print("\nexponents d:", np.round(sol.d, 4))
for z in (1e3, 1e4):
    print(f"  series residual at z = {z:.0e}: {matpoly.series_residual(A, sol, z):.2e}")

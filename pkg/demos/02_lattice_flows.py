import numpy as np

from isodiff import flows, generate, matpoly
from isodiff.refactor import Twist

# Divisor coordinates B_i(k) on the integer lattice.  Moving k_i by one
# lowers the spectrum of B_i by one and leaves the other spectra alone.
state = generate.random_state(seed=4, m=2, n=2)
for k in [(0, 0), (1, 0), (1, 1), (3, -2)]:
    out = flows.divisor_flow(state, k)
    sp = [np.round(np.sort_complex(np.linalg.eigvals(B)), 3) for B in out.B]
    print(k, "spectra", sp[0], sp[1])

# Two independent routes to the same point: single lattice steps, or the
# commuting factor-sequence flows followed by the change of coordinates.
k = (2, -1)
a = flows.divisor_flow(state, k)
b = flows.b_from_c(flows.c_from_b(state, (0, 0)), k)
print("\nroute disagreement at", k, f"{np.abs(a.B - b.B).max():.1e}")

# The lattice equations hold on a whole box around the origin.
box = flows.lattice_box(state, 1)
rep = flows.check_residuals(box, polynomial_steps=True)
print("residuals on the unit box:", {name: f"{v:.1e}" for name, v in rep.items()})

# The same step as an explicit gauge transformation of the polynomial: lower
# the roots of group 0 by one and raise every exponent by one.
A = state.polynomial()
roots = matpoly.eigenvalues(A)
kappa = flows.group_shift_kappa(roots, state.groups, [1, 0])
res = flows.schlesinger_action(A, kappa, [1, 1], roots, with_multiplier=True)
R = res.multiplier.reduced()
print("\nmultiplier = z - B_0 ?", f"{np.linalg.norm(R.num.coeffs[1] + state.B[0]):.1e}")
print("exponent shift", np.round(matpoly.formal_exponents(res.A) - matpoly.formal_exponents(A), 10))

# Autonomous twist: spectra never move and the spectral curve is conserved.
# Alternate the two flows for 100 steps.
aut = flows.c_from_b(generate.random_state(seed=4, m=2, n=2, twist=Twist("autonomous")), (0, 0))
ref = flows.spectral_curve(aut.polynomial())
cur = aut
for step in range(100):
    l = list(cur.l)
    l[step % 2] += 1
    cur = flows.factor_flow(cur, l)
drift = np.abs(flows.spectral_curve(cur.polynomial()) - ref).max() / np.abs(ref).max()
print("\nautonomous: spectral curve drift after 100 steps", f"{drift:.1e}", "at", cur.l)

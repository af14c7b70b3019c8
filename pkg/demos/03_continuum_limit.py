import numpy as np

from isodiff import continuum, generate

# A Fuchsian system with two poles and a diagonal term at infinity.  Moving
# the poles deforms the residues by the Schlesinger ODEs; the residue
# spectra do not change.
sys = generate.random_continuous(seed=0, m=2, n=2)
moved = continuum.integrate(sys, [sys.x, sys.x + np.array([0.2, -0.1])])
print("spectra before", np.round(sys.spectra(), 6).tolist())
print("spectra after ", np.round(moved.spectra(), 6).tolist())

# Embed the residues as divisors of a difference system with small step
# eps, run the lattice flow a distance x / eps, and compare with the ODE.
cfg = continuum.EmbeddingConfig(0.1)
rows, failures = continuum.limit_compare(sys, cfg, [0.2, 0.1], halvings=3)
print("\n  eps       error_1    error_2")
for eps in sorted({r.epsilon for r in rows}, reverse=True):
    e = [r.error for r in rows if r.epsilon == eps]
    print(f"  {eps:<9.5f} {e[0]:.3e}  {e[1]:.3e}")
tot = {}
for r in rows:
    tot[r.epsilon] = np.hypot(tot.get(r.epsilon, 0.0), r.error)
eps = sorted(tot, reverse=True)
print("error ratios per halving:", [round(float(tot[a] / tot[b]), 3) for a, b in zip(eps, eps[1:])])

# Elementary transformations: shifting every eigenvalue of one residue by
# one gives back that residue plus the identity.
shifted = continuum.unit_shift(sys, pole=0, sign=1)
print("\nunit shift: residue 0 + I ?", f"{np.abs(shifted.B[0] - sys.B[0] - np.eye(2)).max():.1e}")

# A single elementary move, continuous side against the rescaled discrete side.
rows, move = continuum.transform_limit_check(sys, cfg, pole=0, eig=0, row=1, sign=1)
for eps in sorted({r.epsilon for r in rows}, reverse=True):
    e = [r.error for r in rows if r.epsilon == eps]
    print(f"  eps {eps:<8.4f} errors {e[0]:.2e} {e[1]:.2e}")

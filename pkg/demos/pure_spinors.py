"""Eigenspinors of the CKY form are pure, and on Kerr-NUT-(A)dS the basis
spinors of the null frame are integrable: their covariant derivative along
their own annihilator stays proportional to the spinor.

    python demos/pure_spinors.py
"""
import numpy as np

from killing_yano import catalog, spin
from killing_yano.jet import lift_point

model = catalog.build_kerr_nut_ads(2, 0)
p = model.sample(1, seed=5)[0]
fr = model.frame_geometry(p)
lam = model.eigenvalues(lift_point(p)).value
phi = spin.normal_form_2form(lam)
A = spin.form_matrix(phi, 2)

for s in range(4):
    z = spin.Spinor.basis(2, s)
    pr = spin.purity_test(z)
    ev = spin.cky_spin_eigenvalue(lam, s)
    ok = np.allclose(A @ z.coefficients, ev * z.coefficients)
    integ = spin.spinor_integrability_residual(spin.SpinorField.constant(z), fr)
    print(f"{spin.subset_label(s):10s} pure={pr.is_pure} chirality={pr.chirality:+d}"
          f" eigenvalue {complex(ev):.4f} ({'ok' if ok else 'mismatch'}) integrability {integ:.1e}")

mixed = spin.Spinor.from_terms(2, {0: 1.0, 1: 1.0})
print("1 + theta^1 is pure:", spin.purity_test(mixed).is_pure)

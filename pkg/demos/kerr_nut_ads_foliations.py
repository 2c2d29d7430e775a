"""Six-dimensional Kerr-NUT-(A)dS: closed CKY form, its normal form, and the
2^m isotropic distributions built from its eigenvectors.

    python demos/kerr_nut_ads_foliations.py
"""
import numpy as np

from killing_yano import catalog, cky, foliation
from killing_yano.jet import lift_point

model = catalog.build_kerr_nut_ads(3, 0)
p = model.sample(1, seed=1)[0]
print("point", np.round(p.array(), 4))

dec = cky.cky_residual(model.metric, model.cky, p)
print(f"CKY residual {dec.relative_residual:.2e}, |d*phi| {dec.K.norm():.3f}")

lams, _ = cky.normal_form(model.cky.at(p), model.metric.at(p).value)
expected = model.eigenvalues(lift_point(p)).value
print("normal-form eigenvalues", np.round(sorted(lams, key=lambda z: z.imag), 6))
print("expected i*x_mu        ", np.round(sorted(expected, key=lambda z: z.imag), 6))

# every choice of one eigenvector per pair spans a null 3-plane
fr = model.frame_geometry(p)
for sel in foliation.enumerate_distributions(model.m):
    print(f"{sel.label():>24}  frobenius {foliation.frobenius_residual(sel, fr):.1e}"
          f"  totally geodesic {foliation.totally_geodesic_residual(sel, fr):.1e}")

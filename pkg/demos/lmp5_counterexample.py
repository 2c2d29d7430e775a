"""A five-dimensional metric whose null frame has integrable isotropic
distributions but whose candidate 2-form is not conformal Killing-Yano.

The reference table of frame commutators is compared against brackets
computed from the frame vector fields. One entry disagrees as tabulated and
agrees once the sign of its (1 - 5xy)/x term is flipped.

    python demos/lmp5_counterexample.py
"""
import numpy as np

from killing_yano import catalog, cky, foliation

model = catalog.build_lmp5()
pts = model.sample(5, seed=3)

fr = model.frame_geometry(pts[0])
for odd in (False, True):
    worst = max(foliation.frobenius_residual(s, fr) for s in foliation.enumerate_distributions(2, odd))
    print(f"rank {2 + odd} distributions, worst Frobenius residual {worst:.1e}")

res = [cky.cky_residual(model.metric, model.cky, p).relative_residual for p in pts]
print("normal-form candidate CKY residuals", np.round(res, 3))

for label, got, want in model.references["brackets"](pts[0]):
    err = np.max(np.abs(got - want)) / max(np.max(np.abs(want)), 1e-300)
    print(f"{label:12s} tabulated vs computed {err:.1e}")
fixed = model.references["brackets_corrected"](pts[0])
print(f"with the sign flip: {max(float(np.max(np.abs(g - w))) for _, g, w in fixed):.1e}")

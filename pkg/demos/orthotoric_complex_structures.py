"""Orthotoric Kahler metric: a Hamiltonian 2-form gives a CKY form, and each
of its 2^m isotropic eigen-distributions is an integrable complex structure.

    python demos/orthotoric_complex_structures.py
"""
from killing_yano import catalog, cky
from killing_yano.cli import RunConfig, run

model = catalog.build_orthotoric(3)
h = cky.HamiltonianData.from_model(model)
p = model.sample(1, seed=2)[0]
geo = model.geometry(p)

print(f"Hamiltonian residual {cky.hamiltonian_residual(h, geo, p):.1e}")
_, dec, clcocl = cky.hamiltonian_to_cky(h, geo, p)
print(f"phi = psi - sigma omega / 2: CKY residual {dec.relative_residual:.1e}")

rep = run(RunConfig("orthotoric", model.params, ("hamiltonian",), points=5))
for check, mx in rep.summary["max"].items():
    print(f"{check:36s} {mx:.1e}")

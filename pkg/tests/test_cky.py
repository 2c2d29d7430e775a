import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from killing_yano import catalog, cky, jet as J
from killing_yano.cky import (DegenerateSpectrumError, FlatCKYConstants, HamiltonianData,
                              InconsistentInputError, PreconditionError, cky_residual,
                              eigenvalue_identity_residuals, flat_cky, flat_cky_field,
                              hamiltonian_residual, hamiltonian_to_cky, normal_form, reconstruct,
                              select_direction, tau_condition_residual)
from killing_yano.exterior import FrameAtPoint, MetricAtPoint, PForm, null_frame_metric, wedge
from killing_yano.geometry import FormField, MetricField, exterior_derivative


def flat_metric(n, sig=None):
    d = np.ones(n) if sig is None else np.asarray(sig, float)
    return MetricField(lambda x: J.Jet.constant(np.diag(d), x.n), n)


def test_pure_tau_flat_example():
    # x1 dx2^dx3 - x2 dx1^dx3 + x3 dx1^dx2 = x _| (dx1^dx2^dx3)
    def rule(x):
        z = 0.0 * x[0]
        # basis order (01,02,03,12,13,23)
        return J.stack([x[2], -x[1], z, x[0], z, z])
    phi = FormField(2, 4, rule)
    for p in [(0.3, -0.2, 0.9, 0.4), (1.1, 0.5, -0.7, 0.2)]:
        dec = cky_residual(flat_metric(4), phi, p)
        assert dec.residual_norm < 1e-12
        assert dec.K.norm() < 1e-12


def test_perturbed_flat_not_cky(rng):
    c = FlatCKYConstants.random(4, rng)
    base = flat_cky_field(c)
    pert = FormField(2, 4, lambda x: base(x) + J.stack([x[0] * x[1]] + [0.0 * x[0]] * 5))
    for p in [(0.6, 0.8, 0.1, -0.3), (-0.9, 0.7, 0.4, 0.2)]:
        assert cky_residual(flat_metric(4), pert, p).residual_norm > 0.1


@pytest.mark.parametrize("fixture", ["kna4", "kna5", "kna6", "kna7"])
def test_kna_closed_cky(fixture, request):
    model = request.getfixturevalue(fixture)
    for p in model.sample(5):
        dec = cky_residual(model.metric, model.cky, p)
        assert dec.relative_residual < 1e-9
        assert dec.tau.norm() < 1e-9 * dec.scale


def test_residual_is_twistor_part(lmp5, kna4):
    for model in (lmp5, kna4):
        p = model.sample(1)[0]
        geo = model.geometry(p)
        dec = cky_residual(geo, model.cky, p)
        assert dec.antisymmetric_part_norm() < 1e-12 * max(dec.scale, 1)
        assert dec.trace_norm(geo.ginv) < 1e-12 * max(dec.scale, 1)


def test_degree_check():
    with pytest.raises(ValueError):
        cky_residual(flat_metric(4), FormField(1, 4, lambda x: x), (0, 0, 0, 0))


def test_tau_condition():
    fr6 = FrameAtPoint(np.eye(6), null=True, m=3)
    assert tau_condition_residual(PForm(3, 6), fr6) == 0
    rng = np.random.default_rng(0)
    fr4 = FrameAtPoint(rng.normal(size=(4, 4)), null=True, m=2)
    assert tau_condition_residual(PForm(3, 4, rng.normal(size=4)), fr4) < 1e-12
    assert tau_condition_residual(PForm.basis_form((0, 1, 2), 6), fr6) == 1
    assert tau_condition_residual(PForm.basis_form((0, 4, 2), 6), fr6) == 1
    assert tau_condition_residual(PForm.basis_form((0, 3, 1), 6), fr6) == 0
    with pytest.raises(ValueError):
        tau_condition_residual(PForm(2, 6), fr6)


def test_tau_condition_holds_for_non_closed_orthotoric(ortho3):
    for p in ortho3.sample(3):
        tau = exterior_derivative(ortho3.cky, p)
        assert tau.norm() > 0.1
        assert tau_condition_residual(tau, ortho3.frame_at(p)) < 1e-10 * tau.norm()


def test_normal_form_kna(kna4):
    p = (0.3, 0.7, 0.2, -0.5)
    lams, fr = normal_form(kna4.cky.at(p), kna4.metric.at(p).value)
    assert np.allclose(sorted(lams, key=lambda z: z.imag), [0.3j, 0.7j], atol=1e-12)
    g = kna4.metric.at(p).value
    assert fr.null_residual(g) < 1e-10
    assert reconstruct(lams, fr).allclose(kna4.cky.at(p), 1e-9)


def test_normal_form_fixed_point():
    eta = null_frame_metric(2)
    phi = PForm(2, 4)
    for mu, lam in enumerate((2j, 5j)):
        phi = phi + PForm.basis_form((mu, 2 + mu), 4, lam)
    lams, fr = normal_form(phi, eta)
    assert np.allclose(sorted(lams, key=abs), [2j, 5j])
    assert reconstruct(lams, fr).allclose(phi, 1e-12)


@pytest.mark.parametrize("odd", [False, True])
def test_normal_form_random(odd, rng):
    m = 3
    n = 2 * m + int(odd)
    A = rng.normal(size=(n, n))
    g = A @ A.T + n * np.eye(n)
    B = rng.normal(size=(n, n))
    phi = PForm.from_dense(B - B.T)
    lams, fr = normal_form(phi, g)
    assert reconstruct(lams, fr).allclose(phi, 1e-9)
    assert fr.null_residual(g) < 1e-9


def test_normal_form_errors():
    with pytest.raises(DegenerateSpectrumError):
        normal_form(PForm.basis_form((0, 1), 4), np.eye(4))
    phi = PForm.basis_form((0, 1), 4) + PForm.basis_form((2, 3), 4)       # +-i twice
    with pytest.raises(DegenerateSpectrumError):
        normal_form(phi, np.eye(4))


def test_normal_form_unpaired_spectrum():
    # a pairing tolerance below rounding leaves +-lambda unmatched
    rng = np.random.default_rng(5)
    A = rng.normal(size=(6, 6))
    B = rng.normal(size=(6, 6))
    with pytest.raises(InconsistentInputError):
        normal_form(PForm.from_dense(B - B.T), A @ A.T + 6 * np.eye(6), tol=1e-22)


def test_flat_constants():
    z = FlatCKYConstants.zeros(4)
    assert flat_cky(z, (0.1, 0.2, 0.3, 0.4)).norm() == 0
    phi0 = PForm.basis_form((0, 2), 4, 3.0)
    c = FlatCKYConstants(PForm(2, 4), PForm(1, 4), PForm(3, 4), phi0)
    assert flat_cky(c, (0.5, -0.1, 0.2, 0.9)).allclose(phi0)
    assert cky_residual(flat_metric(4), flat_cky_field(c), (0.5, 0.1, 0.2, 0.3)).residual_norm == 0
    with pytest.raises(ValueError):
        FlatCKYConstants(PForm(2, 4), PForm(1, 5), PForm(3, 4), PForm(2, 4))
    with pytest.raises(ValueError):
        FlatCKYConstants(PForm(1, 4), PForm(1, 4), PForm(3, 4), PForm(2, 4))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([4, 5, 6]), st.booleans(), st.integers(0, 2 ** 31 - 1),
       st.sampled_from([0, 1, 2]))
def test_flat_family_is_cky(n, complex_, seed, timelike):
    rng = np.random.default_rng(seed)
    sig = np.ones(n)
    sig[:timelike] = -1
    c = FlatCKYConstants.random(n, rng, complex_)
    f = flat_cky_field(c, sig)
    for p in rng.uniform(-2, 2, size=(3, n)):
        dec = cky_residual(flat_metric(n, sig), f, p)
        assert dec.residual_norm < 1e-10 * max(1.0, dec.scale)


def test_identities_parallel_flat():
    model = catalog.build_flat(4)
    res = eigenvalue_identity_residuals(model, model.sample(1)[0])
    assert all(v == 0 for k, v in res.items() if k != "scale")


@pytest.mark.parametrize("fixture", ["kna4", "kna5", "kna6", "kna7"])
@pytest.mark.parametrize("direction", cky.DIRECTIONS)
def test_identities_kna(fixture, direction, request):
    model = request.getfixturevalue(fixture)
    for p in model.sample(3):
        res = eigenvalue_identity_residuals(model, p, direction)
        fams = [f for f in ("compKV1", "LC-", "LC+", "OddCond") if f in res]
        assert ("OddCond" in fams) == model.odd
        assert max(res[f] for f in fams) < 1e-9


def test_compkv1_matches_codifferential(kna4):
    from killing_yano.geometry import codifferential
    p = kna4.sample(1)[0]
    geo = kna4.geometry(p)
    dec = cky_residual(geo, kna4.cky, p)
    assert np.allclose(dec.K.components, -codifferential(kna4.cky, geo, p).components, atol=1e-10)


def test_identities_fail_for_lmp5_candidate(lmp5):
    worst = min(max(v for k, v in eigenvalue_identity_residuals(lmp5, p).items()
                    if k in ("compKV1", "LC-", "LC+"))
                for p in lmp5.sample(10))
    assert worst > 1e-3


def test_select_direction(kna6):
    d, worst = select_direction(kna6, kna6.sample(3))
    assert d in cky.DIRECTIONS and worst < 1e-9


# -- Hamiltonian 2-forms --------------------------------------------------------

def test_hamiltonian_invariants(ortho3):
    h = HamiltonianData.from_model(ortho3)
    for p in ortho3.sample(5):
        chk = h.checks(ortho3.metric, p)
        assert chk["J^2+1"] < 1e-10 and chk["omega-gJ"] < 1e-10 and chk["sigma-trace"] < 1e-10


@pytest.mark.parametrize("m", [2, 3])
def test_orthotoric_hamiltonian(m):
    model = catalog.build_orthotoric(m)
    h = HamiltonianData.from_model(model)
    for p in model.sample(5):
        geo = model.geometry(p)
        assert hamiltonian_residual(h, geo, p) < 1e-9
        phi, dec, cl = hamiltonian_to_cky(h, geo, p)
        assert dec.relative_residual < 1e-9 and cl < 1e-9
        # the resulting CKY form is not closed
        assert exterior_derivative(cky.phi_from_hamiltonian(h), p).norm() > 1e-3


def _flat_kahler():
    n = 4
    om = PForm.basis_form((0, 1), n) + PForm.basis_form((2, 3), n)
    const = lambda c: (lambda x: J.Jet.constant(c, x.n))
    return HamiltonianData(FormField(2, n, const(om.components)), FormField(2, n, const(om.components)),
                           FormField(0, n, const(np.array([2.0]))))


def test_parallel_hamiltonian_flat():
    h = _flat_kahler()
    g = flat_metric(4)
    p = (0.3, 0.1, -0.4, 0.8)
    assert hamiltonian_residual(h, g, p) == 0
    phi, dec, cl = hamiltonian_to_cky(h, g, p)
    assert dec.residual_norm == 0 and cl == 0


def test_perturbed_hamiltonian_fails(ortho3, rng):
    h = HamiltonianData.from_model(ortho3)
    C = rng.normal(size=15)
    bad = HamiltonianData(h.omega, FormField(2, 6, lambda x: h.psi(x) + x[0] * x[3] * C), h.sigma)
    for p in ortho3.sample(3):
        assert hamiltonian_residual(bad, ortho3.metric, p) > 0.01


def test_hamiltonian_needs_kahler(kna4):
    with pytest.raises(PreconditionError):
        HamiltonianData.from_model(kna4)
    h = _flat_kahler()
    curved = MetricField(lambda x: J.stack([J.stack([1.0 + x[0] ** 2 if i == j else 0.0 for j in range(4)], 4)
                                             for i in range(4)]), 4)
    with pytest.raises(PreconditionError):
        hamiltonian_residual(h, curved, (0.5, 0.2, 0.1, 0.3))

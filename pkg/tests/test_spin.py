import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from killing_yano import catalog, jet as J
from killing_yano.exterior import PForm
from killing_yano.spin import (CliffordVector, NotPureError, Spinor, SpinorField,
                               UnsupportedDimensionError, _eta, annihilator, clifford_mul,
                               cky_spin_eigenvalue, form_action, form_matrix, frame_gammas,
                               inner, normal_form_2form, pairing_symmetry, purity_test,
                               spinor_bilinear, spinor_covariant_derivative,
                               spinor_integrability_residual, weyl_spin_residual)


@pytest.mark.parametrize("m,odd", [(1, False), (2, False), (2, True), (3, False), (3, True), (4, False)])
def test_clifford_relation(m, odd):
    G = frame_gammas(m, odd)
    anti = np.einsum("aij,bjk->abik", G, G) + np.einsum("bij,ajk->abik", G, G)
    target = -2 * np.einsum("ab,ik->abik", _eta(m, odd), np.eye(2 ** m))
    assert np.max(np.abs(anti - target)) < 1e-12


cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4).flatmap(lambda m: st.tuples(
    st.lists(cplx, min_size=m, max_size=m), st.lists(cplx, min_size=m, max_size=m),
    st.lists(cplx, min_size=2 ** m, max_size=2 ** m))))
def test_raw_clifford_square(data):
    X, xi, z = data
    v = CliffordVector(np.array(X), np.array(xi))
    zeta = Spinor(len(X), np.array(z))
    out = clifford_mul(v, clifford_mul(v, zeta))
    assert np.allclose(out.coefficients, -v.square() * zeta.coefficients, atol=1e-9)


def test_vector_and_covector_on_one():
    one = Spinor.basis(3, 0)
    X = CliffordVector(np.array([1.0, 2.0, 0.5]), np.zeros(3))
    assert clifford_mul(X, one).norm() == 0
    xi = np.array([0.3, -1.0, 2.0])
    out = clifford_mul(CliffordVector(np.zeros(3), xi), one)
    assert out.allclose(Spinor.from_terms(3, {1: 0.3, 2: -1.0, 4: 2.0}))


def test_two_form_on_one():
    B = PForm.basis_form((0, 1), 4, 1.0)
    out = form_action(B, Spinor.basis(2, 0))
    assert out.allclose(Spinor.from_terms(2, {3: -1.0}))


@pytest.mark.parametrize("m,odd", [(1, False), (2, False), (2, True), (3, False), (3, True)])
def test_normal_form_eigenspinors(m, odd):
    lams = [0.7j, -1.1 + 0.4j, 2.0j][:m]
    A = form_matrix(normal_form_2form(lams, odd), m, odd)
    one = Spinor.basis(m, 0)
    assert np.allclose(A @ one.coefficients, -0.5 * sum(lams) * one.coefficients)
    full = Spinor.basis(m, 2 ** m - 1)
    assert np.allclose(A @ full.coefficients, 0.5 * sum(lams) * full.coefficients)
    for s in range(2 ** m):
        z = Spinor.basis(m, s).coefficients
        assert np.allclose(A @ z, cky_spin_eigenvalue(lams, s) * z, atol=1e-13)


def test_beta_action_matches_two_form():
    # V_1 ^ V_2 lowered is theta^{m+1} ^ theta^{m+2} in frame labels
    m = 2
    beta = PForm.basis_form((2, 3), 4, 1.0)
    assert form_action(beta, Spinor.basis(m, 0)).norm() == 0
    full = Spinor.basis(m, 3)
    out = form_action(beta, full)
    assert out.allclose(Spinor.from_terms(m, {0: out.coefficients[0]}))
    assert abs(out.coefficients[0]) == pytest.approx(1.0)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_basis_spinors_pure(m):
    for s in range(2 ** m):
        pr = purity_test(Spinor.basis(m, s))
        assert pr.is_pure and pr.dimension == m
        assert pr.chirality == (1 if bin(s).count("1") % 2 == 0 else -1)


def test_annihilator_of_basis_spinor():
    m, s = 3, 0b101
    N = annihilator(Spinor.basis(m, s))
    # theta^S is killed by V^mu for mu in S and by V_nu for nu not in S
    expected = {m + 0, m + 2, 1}
    E = np.zeros((2 * m, m))
    for k, a in enumerate(sorted(expected)):
        E[a, k] = 1
    assert np.linalg.matrix_rank(np.hstack([N, E]), tol=1e-9) == m


def test_not_pure_examples():
    z = Spinor.from_terms(4, {0: 1.0, 15: 1.0})
    assert purity_test(z).dimension == 0
    mixed = Spinor.from_terms(2, {0: 1.0, 1: 1.0})
    assert not purity_test(mixed).is_pure


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_pairing_symmetry(m):
    assert pairing_symmetry(m) == (-1) ** (m * (m - 1) // 2)


def test_inner_example():
    # <1, theta^{12}> is the top coefficient of 1 ^ theta^{12}
    assert inner(Spinor.basis(2, 0), Spinor.basis(2, 3)) == pytest.approx(1.0)
    assert inner(Spinor.basis(2, 0), Spinor.basis(2, 1)) == 0


def test_bilinear_degree_one_example():
    one = Spinor.basis(1, 0)
    phi = spinor_bilinear(one, one, 1)
    assert np.allclose(phi.components, [0, np.sqrt(2)])


@pytest.mark.parametrize("m", [2, 3])
def test_pure_bilinears_vanish_below_middle(m):
    z = Spinor.basis(m, 0b1 if m == 3 else 0)
    for p in range(m):
        assert np.allclose(spinor_bilinear(z, z, p).components, 0, atol=1e-12)
    assert np.max(np.abs(spinor_bilinear(z, z, m).components)) > 0.1


def test_covariant_derivative_leibniz(kna4):
    p = kna4.sample(1, seed=3)[0]
    fr = kna4.frame_geometry(p)
    c1, c2 = np.array([1.0, 0.3, -0.2, 0.5]), np.array([0.0, 1.0, 2.0, -1.0])
    f = lambda x: J.sin(x[0]) + x[1] ** 2
    fld = SpinorField(2, lambda x: f(x) * J.Jet.constant(c1, x.n) + J.Jet.constant(c2, x.n))
    const1 = SpinorField.constant(Spinor(2, c1))
    const2 = SpinorField.constant(Spinor(2, c2))
    fp = f(J.lift_point(p))
    for a in range(4):
        lhs = spinor_covariant_derivative(fld, fr, a)
        df = complex(fp.grad @ fr.V[:, a])
        rhs = (spinor_covariant_derivative(const1, fr, a) * complex(fp.value)
               + Spinor(2, c1) * df + spinor_covariant_derivative(const2, fr, a))
        assert lhs.allclose(rhs, atol=1e-10)


def test_flat_constant_spinor_parallel():
    model = catalog.build_flat(4)
    fr = model.frame_geometry(np.array([0.1, 0.2, 0.3, 0.4]))
    fld = SpinorField.constant(Spinor.from_terms(2, {0: 1.0, 3: 2.0}))
    for a in range(4):
        assert spinor_covariant_derivative(fld, fr, a).norm() < 1e-14


@pytest.mark.parametrize("fixture", ["kna4", "kna6"])
def test_kna_basis_spinors_integrable(fixture, request):
    model = request.getfixturevalue(fixture)
    for p in model.sample(3, seed=7):
        fr = model.frame_geometry(p)
        for s in range(2 ** model.m):
            r = spinor_integrability_residual(SpinorField.constant(Spinor.basis(model.m, s)), fr)
            assert r < 1e-9


def test_rotating_spinor_not_integrable():
    model = catalog.build_flat(4)
    fr = model.frame_geometry(np.array([0.2, 0.5, -0.3, 0.1]))

    def rule(x):
        e = J.exp(x[0])
        return J.stack([e, 0 * e, 0 * e, e * x[1]])

    assert spinor_integrability_residual(SpinorField(2, rule), fr) > 1e-2


@pytest.mark.parametrize("fixture", ["kna4", "kna6"])
def test_weyl_spinor_kna(fixture, request):
    model = request.getfixturevalue(fixture)
    for p in model.sample(3, seed=11):
        fr = model.frame_geometry(p)
        for s in range(2 ** model.m):
            r = weyl_spin_residual(fr.weyl, Spinor.basis(model.m, s))
            assert not r.vacuous and float(r) < 1e-9


def test_weyl_spinor_flat_vacuous():
    fr = catalog.build_flat(4).frame_geometry(np.zeros(4))
    assert weyl_spin_residual(fr.weyl, Spinor.basis(2, 0)).vacuous


def test_errors(kna5):
    fr = kna5.frame_geometry(kna5.sample(1)[0])
    with pytest.raises(UnsupportedDimensionError):
        spinor_integrability_residual(SpinorField.constant(Spinor.basis(2, 0)), fr)
    with pytest.raises(UnsupportedDimensionError):
        weyl_spin_residual(np.zeros((5,) * 4), Spinor.basis(2, 0))
    fr4 = catalog.build_flat(4).frame_geometry(np.zeros(4))
    with pytest.raises(NotPureError):
        spinor_integrability_residual(SpinorField.constant(Spinor.from_terms(2, {0: 1, 1: 1})), fr4)
    with pytest.raises(ValueError):
        Spinor(2, np.ones(3))

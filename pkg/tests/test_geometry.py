import numpy as np
import pytest

from killing_yano import catalog, jet as J
from killing_yano.catalog import ParameterRecord
from killing_yano.cky import cky_residual
from killing_yano.exterior import PForm
from killing_yano.geometry import (CoframeField, FormField, FrameGeometry, MetricField, PointGeometry,
                                   christoffel, codifferential, covariant_derivative_form,
                                   curvature, exterior_derivative, frame_connection, lie_bracket,
                                   vector_field_from_frame)


def sphere():
    def rule(x):
        s = J.sin(x[0])
        return J.stack([J.stack([1.0, 0.0], 2), J.stack([0.0, s * s], 2)])
    return MetricField(rule, 2, "S2")


def flat_metric(n):
    return MetricField(lambda x: J.Jet.constant(np.eye(n), x.n), n, "flat")


def test_flat_christoffel_zero():
    t = christoffel(flat_metric(4), (0.1, 0.2, 0.3, 0.4))
    assert not np.any(t.coord)


def test_sphere_christoffel_against_fd():
    th = np.pi / 4
    t = christoffel(sphere(), (th, 0.3))
    assert np.isclose(t.coord[0, 1, 1], -0.5)
    # finite-difference oracle on the defining formula
    h = 1e-5
    g = lambda q: np.diag([1.0, np.sin(q[0]) ** 2])
    dg = np.array([(g([th + h, 0]) - g([th - h, 0])) / (2 * h), np.zeros((2, 2))])
    gi = np.linalg.inv(g([th, 0]))
    G = 0.5 * (np.einsum("lm,kjm->lkj", gi, dg)
               + np.einsum("lm,jkm->lkj", gi, dg) - np.einsum("lm,mkj->lkj", gi, dg))
    assert np.allclose(t.coord, G, atol=1e-8)


def test_sphere_riemann():
    for th in (0.4, 1.1):
        R = curvature(sphere(), (th, 0.0)).riemann
        assert np.isclose(R[0, 1, 0, 1], np.sin(th) ** 2)


def test_metricity_and_torsion(kna4):
    p = kna4.sample(1)[0]
    t = christoffel(kna4.metric, p)
    assert t.metricity_residual() < 1e-11
    assert t.torsion_residual() == 0.0


@pytest.mark.parametrize("fixture", ["kna4", "kna5", "kna6", "ortho3", "lmp5"])
def test_curvature_symmetries(fixture, request):
    model = request.getfixturevalue(fixture)
    for p in model.sample(3):
        c = curvature(model.metric, p)
        assert c.symmetry_residual() < 1e-9
        assert c.bianchi_residual() < 1e-9
        assert c.weyl_trace_residual() < 1e-9


@pytest.mark.parametrize("m,eps", [(2, 0), (3, 0), (2, 1)])
def test_massless_kna_is_conformally_flat(m, eps):
    d = catalog.default_kna_params(m, eps)
    model = catalog.build_kerr_nut_ads(m, eps, ParameterRecord(m=m, eps=eps, a=d.a, M=(0,) * m, g=0.3))
    for p in model.sample(3):
        geo = model.geometry(p)
        assert np.max(np.abs(geo.weyl)) < 1e-9 * np.max(np.abs(geo.riemann))


def test_kna_is_einstein(kna6):
    for p in kna6.sample(3):
        geo = kna6.geometry(p)
        assert np.max(np.abs(geo.ricci - geo.scalar / geo.n * geo.g)) < 1e-9 * np.max(np.abs(geo.ricci))


def test_flat_coordinate_frame_connection_zero():
    cof = CoframeField(lambda x: J.Jet.constant(np.eye(4), x.n), False, 2, False)
    t = frame_connection(flat_metric(4), cof, (0.1, 0.2, 0.3, 0.4))
    assert not np.any(t.frame)


@pytest.mark.parametrize("fixture", ["kna4", "kna7", "lmp5"])
def test_frame_connection_consistency(fixture, request):
    model = request.getfixturevalue(fixture)
    p = model.sample(1)[0]
    fr = model.frame_geometry(p)
    G = fr.gamma
    scale = np.max(np.abs(G))
    # rotation coefficients are the antisymmetrized connection
    assert np.max(np.abs(fr.rotation - (G - np.swapaxes(G, 0, 1)))) < 1e-10 * scale
    # frame metric is constant so the lowered connection is skew in its last pair
    L = fr.gamma_lowered
    assert np.max(np.abs(L + np.swapaxes(L, 1, 2))) < 1e-10 * scale


def test_rotation_against_jet_brackets(kna4):
    p = kna4.sample(1)[0]
    fr = kna4.frame_geometry(p)
    V = [vector_field_from_frame(kna4.coframe, a) for a in range(4)]
    for a in range(4):
        for b in range(4):
            br = lie_bracket(V[a], V[b], p)
            assert np.allclose(fr.theta @ br, fr.rotation[a, b], atol=1e-10)


@pytest.mark.parametrize("fixture", ["kna4", "kna5", "ortho3"])
def test_frame_curvature_matches_projection(fixture, request):
    model = request.getfixturevalue(fixture)
    for p in model.sample(2):
        fr = model.frame_geometry(p)
        a, b = fr.riemann_structure, fr.riemann_projected
        assert np.max(np.abs(a - b)) < 1e-9 * np.max(np.abs(b))


def test_exterior_derivative_simple():
    phi = FormField(1, 2, lambda x: J.stack([0.0, x[0]], 2))      # x^1 dx^2
    d = exterior_derivative(phi, (0.3, 0.7))
    assert d.allclose(PForm.basis_form((0, 1), 2))


def test_d_squared_zero():
    # df for f = x0^2 x1 sin(x2), coded by hand
    def df(x):
        return J.stack([2 * x[0] * x[1] * J.sin(x[2]), x[0] ** 2 * J.sin(x[2]),
                        x[0] ** 2 * x[1] * J.cos(x[2])])
    assert exterior_derivative(FormField(1, 3, df), (0.4, 1.2, 0.7)).norm() < 1e-14


def test_closed_cky_on_kna(kna4):
    for p in kna4.sample(3):
        assert exterior_derivative(kna4.cky, p).norm() < 1e-10


def test_kahler_form_closed(ortho3):
    for p in ortho3.sample(3):
        assert exterior_derivative(FormField(2, 6, ortho3.hamiltonian["omega"].rule), p).norm() < 1e-10


def test_codifferential_flat_constant():
    c = PForm.basis_form((0, 1), 4).components
    f = FormField(2, 4, lambda x: J.Jet.constant(c, x.n))
    assert codifferential(f, flat_metric(4), (0.1, 0.2, 0.3, 0.4)).norm() == 0


@pytest.mark.parametrize("fixture", ["kna4", "ortho3"])
def test_trace_of_nabla_is_minus_codifferential(fixture, request):
    model = request.getfixturevalue(fixture)
    p = model.sample(1)[0]
    geo = model.geometry(p)
    T = covariant_derivative_form(model.cky, geo, p)
    K = np.einsum("ca,cab->b", geo.ginv, T)
    dstar = codifferential(model.cky, geo, p)
    assert np.allclose(K, -dstar.components, atol=1e-10 * np.max(np.abs(T)))


def test_codifferential_dense_oracle(rng):
    # quadratic-coefficient 2-form on a non-flat diagonal metric in n=4
    C = rng.normal(size=(6, 4, 4))

    def rule(x):
        return J.stack([J.einsum("i,i->", J.einsum("ij,j->i", J.Jet.constant(C[k], 4), x), x)
                        for k in range(6)])

    def metric(x):
        d = [1.0 + x[0] * x[0], 2.0 + x[1] * x[2], 1.5 + J.sin(x[3]), 1.0 + x[0] * x[3]]
        rows = [J.stack([d[i] if i == j else 0.0 for j in range(4)], 4) for i in range(4)]
        return J.stack(rows)

    f, g = FormField(2, 4, rule), MetricField(metric, 4)
    p = (0.3, 0.6, 0.2, 0.5)
    geo = PointGeometry(g, p)
    T = covariant_derivative_form(f, geo, p)
    dense = -np.einsum("ca,cab->b", geo.ginv, T)
    assert np.allclose(codifferential(f, geo, p).components, dense, atol=1e-10)


def test_antisymmetrized_nabla_is_d(kna5):
    p = kna5.sample(1)[0]
    geo = kna5.geometry(p)
    dec = cky_residual(geo, kna5.cky, p)
    d = exterior_derivative(kna5.cky, p)
    assert np.allclose(dec.tau.components, d.components, atol=1e-10 * dec.scale)


def test_coordinate_brackets_commute():
    e1 = lambda x: J.Jet.constant(np.array([1.0, 0, 0]), 3)
    e2 = lambda x: J.Jet.constant(np.array([0, 1.0, 0]), 3)
    assert not np.any(lie_bracket(e1, e2, (0.1, 0.2, 0.3)))


def test_kna_brackets_match_closed_form(kna4):
    for p in kna4.sample(3):
        for label, got, want in kna4.references["brackets"](p):
            assert np.allclose(got, want, atol=1e-10), label


def test_lmp5_first_bracket(lmp5):
    for p in lmp5.sample(3):
        label, got, want = lmp5.references["brackets"](p)[0]
        assert label == "[V_1,V_2]" and np.allclose(got, want, atol=1e-10)


def test_lie_bracket_antisymmetric_and_jacobi(rng):
    # linear vector fields X(x) = A x have [X, Y] = (B A - A B) x, linear again
    A = rng.normal(size=(3, 3, 3))
    lin = lambda M: (lambda x: J.einsum("ij,j->i", J.Jet.constant(M, 3), x))
    p = np.array([0.2, -0.4, 0.9])
    X, Y = lin(A[0]), lin(A[1])
    assert np.allclose(lie_bracket(X, Y, p), (A[1] @ A[0] - A[0] @ A[1]) @ p)
    assert np.allclose(lie_bracket(X, Y, p), -lie_bracket(Y, X, p))
    c = lambda M, N: N @ M - M @ N
    total = sum(lie_bracket(lin(A[i]), lin(c(A[j], A[k])), p)
                for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)))
    assert np.allclose(total, 0, atol=1e-12)


def test_frame_geometry_rejects_bad_frame():
    from killing_yano.exterior import IllConditionedFrameError
    cof = CoframeField(lambda x: J.stack([J.stack([x[0], 0.0], 2), J.stack([0.0, 1.0], 2)]), False, 1)
    geo = PointGeometry(flat_metric(2), (0.0, 1.0))
    with pytest.raises((IllConditionedFrameError, J.SingularEvaluationError)):
        FrameGeometry(geo, cof)

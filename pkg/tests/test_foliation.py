import numpy as np
import pytest

from killing_yano import catalog, jet as J
from killing_yano.foliation import (DistributionSelector, NoRealStructureError,
                                    connection_pattern_residual, distribution_at,
                                    enumerate_distributions, frobenius_residual,
                                    real_intersection_rank, totally_geodesic_residual)
from killing_yano.geometry import CoframeField, FrameGeometry, MetricField, PointGeometry


def test_enumeration():
    assert len(enumerate_distributions(1)) == 2
    sels = enumerate_distributions(3)
    assert [s.mask for s in sels] == list(range(8))
    odd = enumerate_distributions(4, True)
    assert len(odd) == 16 and all(8 in s.span_labels(True) for s in odd)
    with pytest.raises(ValueError):
        enumerate_distributions(0)
    with pytest.raises(ValueError):
        DistributionSelector(4, 2)


def test_selector_labels():
    s = DistributionSelector(0b10, 2)
    assert s.span_labels() == (0, 3)
    assert s.annihilator_labels() == (1, 2)
    assert s.complement().span_labels() == (2, 1)
    assert s.label() == "{V_1,V^2}"
    assert DistributionSelector(0, 2, True).span_labels(True) == (0, 1, 4)


def flat_frame(rule, m=2, n=4):
    metric = MetricField(lambda x: J.Jet.constant(np.eye(n), x.n), n)
    return lambda p: FrameGeometry(PointGeometry(metric, p), CoframeField(rule, True, m, False))


def test_flat_coordinate_distribution():
    r = 2 ** -0.5
    th = np.array([[r, 0, 1j * r, 0], [0, r, 0, 1j * r], [r, 0, -1j * r, 0], [0, r, 0, -1j * r]])
    fr = flat_frame(lambda x: J.Jet.constant(th, x.n))((0.1, 0.2, 0.3, 0.4))
    for s in enumerate_distributions(2):
        assert frobenius_residual(s, fr) == 0 and totally_geodesic_residual(s, fr) == 0
    assert connection_pattern_residual(fr)["max"] == 0


@pytest.mark.parametrize("m,eps", [(2, 0), (3, 0), (4, 0), (2, 1), (3, 1)])
def test_kna_distributions(m, eps):
    model = catalog.build_kerr_nut_ads(m, eps)
    for p in model.sample(3):
        fr = model.frame_geometry(p)
        for s in enumerate_distributions(m):
            d = distribution_at(s, fr)
            assert d.isotropy_residual(model.metric.at(p).value) < 1e-10
            assert d.annihilation_residual() < 1e-10
            assert d.rank == m
            assert frobenius_residual(s, fr) < 1e-9
            assert totally_geodesic_residual(s, fr) < 1e-9
        if eps:
            for s in enumerate_distributions(m, True):
                assert frobenius_residual(s, fr) < 1e-9
        assert connection_pattern_residual(fr)["max"] < 1e-9


def test_adjoined_odd_leg_not_totally_geodesic(kna5):
    fr = kna5.frame_geometry(kna5.sample(1)[0])
    assert max(totally_geodesic_residual(s, fr) for s in enumerate_distributions(2, True)) > 1e-3


def test_non_isotropic_pair_not_involutive(kna4):
    # [V_1, V^1] has components along V_2 - V^2
    fr = kna4.frame_geometry(kna4.sample(1)[0])
    om = fr.rotation[0, 2]
    assert abs(om[1]) > 1e-3 and np.isclose(om[1], -om[3])


def test_lmp5_distributions(lmp5):
    for p in lmp5.sample(5):
        fr = lmp5.frame_geometry(p)
        for s in enumerate_distributions(2):
            assert frobenius_residual(s, fr) < 1e-9
            assert totally_geodesic_residual(s, fr) < 1e-9
        for s in enumerate_distributions(2, True):
            assert frobenius_residual(s, fr) < 1e-9


def test_orthotoric_complex_structures(ortho3):
    for p in ortho3.sample(3):
        fr = ortho3.frame_geometry(p)
        assert max(frobenius_residual(s, fr) for s in enumerate_distributions(3)) < 1e-9


def test_flat_counterexample_breaks_patterns():
    # a null frame rotated by an x-dependent angle is not adapted to any CKY
    r = 2 ** -0.5

    def rule(x):
        a = 0.7 * x[2] + x[3] * x[0]
        c, s = J.cos(a), J.sin(a)
        z = 0.0 * x[0]
        e = [J.stack([c, s, z, z]), J.stack([-s, c, z, z]),
             J.stack([z, z, z + 1.0, z]), J.stack([z, z, z, z + 1.0])]
        return J.stack([(e[0] + e[2] * 1j) * r, (e[1] + e[3] * 1j) * r,
                        (e[0] - e[2] * 1j) * r, (e[1] - e[3] * 1j) * r])

    fr = flat_frame(rule)((0.3, -0.5, 0.8, 0.6))
    assert connection_pattern_residual(fr)["max"] > 1e-2


def test_real_intersection_ranks(kna4, ortho3):
    for model in (kna4, ortho3):
        p = model.sample(1)[0]
        assert all(real_intersection_rank(s, model, p) == 0 for s in enumerate_distributions(model.m))
    lor = catalog.build_flat(6, "lorentzian")
    assert all(real_intersection_rank(s, lor, lor.sample(1)[0]) == 1 for s in enumerate_distributions(3))
    split = catalog.build_flat(6, "split")
    assert all(real_intersection_rank(s, split, split.sample(1)[0]) == 3 for s in enumerate_distributions(3))


def test_no_real_structure():
    prm = catalog.default_kna_params(2, 0)
    from killing_yano.catalog import ParameterRecord
    model = catalog.build_kerr_nut_ads(2, 0, ParameterRecord(m=2, eps=0, a=(1.3 + 0.1j,), M=prm.M, g=0.3))
    with pytest.raises(NoRealStructureError):
        real_intersection_rank(DistributionSelector(0, 2), model, model.sample(1)[0])

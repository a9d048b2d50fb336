import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import EUC, QUAD, norms
from wulfflab.errors import ConfigError, DegeneratePolygon, EmptyTarget, EpsilonUnresolvable
from wulfflab.geometry import (GridDomain, GridSubset, Polygon, anisotropic_distance, coarsen,
                               domain_from_spec, eikonal_volume, polygon_measure, polygon_perimeter_F,
                               prolong, regular_polygon, strip_volume_check)
from wulfflab.norms import kappa, wulff_perimeter


@given(norms(), st.floats(0.2, 3.0))
def test_regular_polygon_approximates_wulff_perimeter_for_euclidean(F, r):
    poly = regular_polygon(720, r)
    assert np.isclose(polygon_perimeter_F(poly, EUC), 2 * np.pi * r, rtol=1e-4)
    assert np.isclose(polygon_measure(poly), np.pi * r * r, rtol=1e-4)
    # the F-perimeter of a scaled polygon scales linearly
    big = Polygon(tuple((2 * x, 2 * y) for x, y in poly.vertices))
    assert np.isclose(polygon_perimeter_F(big, F), 2 * polygon_perimeter_F(poly, F))


def test_polygon_validation():
    with pytest.raises(DegeneratePolygon):
        Polygon(((0, 0), (1, 0)))
    with pytest.raises(DegeneratePolygon):
        Polygon(((0, 0), (0, 1), (1, 0)))  # clockwise
    with pytest.raises(DegeneratePolygon):
        Polygon(((0, 0), (1, 1), (1, 0), (0, 1)))  # bow tie
    L = Polygon(((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)))
    assert not L.is_convex()
    assert regular_polygon(6).is_convex()


@given(st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.sampled_from([1 / 8, 1 / 16, 1 / 20]))
def test_rectangle_measure(w, hgt, h):
    d = GridDomain.rectangle(w, hgt, h)
    assert np.isclose(d.measure, round(w / h) * round(hgt / h) * h * h)
    assert not d.mask[0].any() and not d.mask[:, -1].any()


@pytest.mark.parametrize("F", [EUC, QUAD])
def test_wulff_domain_measure(F):
    d = GridDomain.wulff(F, 1.0, 1 / 64)
    assert np.isclose(d.measure, kappa(F), rtol=1e-2)


def test_wulff_union_is_two_components():
    from scipy import ndimage
    d = GridDomain.wulff_union(EUC, [0.5, 0.5], 1 / 32)
    assert ndimage.label(d.mask)[1] == 2


def test_coarsen_prolong_roundtrip():
    fine = GridDomain.wulff(EUC, 1.0, 1 / 32)
    c = coarsen(fine)
    assert np.isclose(c.h, 2 * fine.h)
    assert c.measure <= fine.measure
    v = prolong(np.where(c.mask, 1.0, 0.0), c, fine)
    # every fine cell under a coarse inside cell receives 1
    assert v.sum() * fine.h**2 == pytest.approx(c.measure)


def test_subset_validation():
    d = GridDomain.rectangle(1, 1, 0.25)
    with pytest.raises(ValueError):
        GridSubset(d, np.ones_like(d.mask))
    s = d.full()
    assert s.complement().is_empty()
    assert (s & s.complement()).is_empty()


def test_domain_needs_interior():
    with pytest.raises(ConfigError):
        GridDomain(np.zeros((4, 4), bool), 0.1)
    m = np.zeros((4, 4), bool)
    m[0, 1] = True
    with pytest.raises(ConfigError):
        GridDomain(m, 0.1)


def test_distance_to_point_is_polar_norm():
    d = GridDomain.rectangle(2.0, 2.0, 1 / 16)
    tgt = np.zeros_like(d.mask)
    tgt[17, 17] = True
    dist = anisotropic_distance(d, tgt, QUAD)
    C = d.centers()
    assert np.allclose(dist, QUAD.polar(C - C[17, 17]))
    with pytest.raises(EmptyTarget):
        anisotropic_distance(d, np.zeros_like(d.mask), QUAD)


@pytest.mark.parametrize("F", [EUC, QUAD])
def test_eikonal_volume(F):
    d = GridDomain.wulff(F, 1.0, 1 / 48)
    assert np.isclose(eikonal_volume(d, F), d.measure, rtol=0.05)


def test_strip_volume_recovers_perimeter():
    d = GridDomain.rectangle(3.0, 3.0, 1 / 64, origin=(-1.5, -1.5))
    cells = EUC.polar(d.centers()) < 0.5
    rows = strip_volume_check(GridSubset(d, cells & d.mask), EUC, [0.1, 0.2])
    # |E^eps \ E| = kappa ((r + eps)^2 - r^2) for a Wulff shape of radius r
    for r in rows:
        assert np.isclose(r.strip_measure, np.pi * ((0.5 + r.eps) ** 2 - 0.25), rtol=0.03)
    assert rows[1].ratio > rows[0].ratio > wulff_perimeter(EUC, 0.5) * 0.97
    with pytest.raises(EpsilonUnresolvable):
        strip_volume_check(GridSubset(d, cells & d.mask), EUC, [1 / 128])


def test_domain_from_spec():
    assert domain_from_spec({"kind": "rectangle", "width": 1, "height": 1, "h": 0.25}).cell_count == 16
    assert domain_from_spec({"kind": "rectangle", "width": 1, "height": 1, "h": 0.125}, coarsen_by=2).cell_count == 16
    m = domain_from_spec({"kind": "mask", "rows": ["##.", ".##"]})
    assert m.cell_count == 4
    with pytest.raises(ConfigError) as e:
        domain_from_spec({"kind": "rectangle", "width": 1, "h": 0.1})
    assert e.value.field == "height"
    with pytest.raises(ConfigError) as e:
        domain_from_spec({"kind": "wulff", "R": 1, "h": 0.1})
    assert e.value.field == "norm"
    with pytest.raises(ConfigError) as e:
        domain_from_spec({"kind": "blob", "h": 0.1})
    assert e.value.field == "kind"

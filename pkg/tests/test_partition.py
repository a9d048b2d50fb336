import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import EUC, QUAD
from wulfflab.errors import NoRoomForPair, NotDisjoint, TooLarge
from wulfflab.geometry import GridDomain, GridSubset
from wulfflab.partition import (SubsetPair, adjust_couple, brute_force_h2, halfplane_splits,
                                lower_bounds, solve_h2, solve_hk, voronoi_split)


def _tiny(m):
    return GridDomain(np.pad(m, 1), 0.25)


@settings(max_examples=8)
@given(arrays(bool, (4, 4), elements=st.booleans()).filter(lambda m: 2 <= m.sum() <= 9),
       st.sampled_from([EUC, QUAD]))
def test_h2_upper_bounds_brute_force(m, F):
    d = _tiny(m)
    a, b = solve_h2(d, F, exhaustive=True), brute_force_h2(d, F)
    # the solver returns an admissible pair, so it can only be above the optimum
    assert a.h2 >= b.h2 * (1 - 1e-12)
    assert b.h2 >= max(b.ratios) * (1 - 1e-12)


def test_pair_validation():
    d = GridDomain.rectangle(1.0, 1.0, 0.25)
    a = np.zeros_like(d.mask)
    a[1, 1] = True
    with pytest.raises(NotDisjoint):
        SubsetPair(GridSubset(d, a), GridSubset(d, a))
    with pytest.raises(ValueError):
        SubsetPair(GridSubset(d, a), GridSubset(d, np.zeros_like(a)))
    one = np.zeros((3, 3), bool)
    one[1, 1] = True
    with pytest.raises(NoRoomForPair):
        solve_h2(GridDomain(one, 0.1), EUC)
    with pytest.raises(TooLarge):
        brute_force_h2(GridDomain.rectangle(1.0, 1.0, 0.2), EUC)


def test_adjust_couple_never_increases():
    d = GridDomain.rectangle(2.0, 1.0, 1 / 12)
    a, b = voronoi_split(d, EUC, [(2, 2), (20, 10)])
    r = adjust_couple(SubsetPair(GridSubset(d, a), GridSubset(d, b)), EUC)
    assert all(y <= x + 1e-12 for x, y in zip(r.history, r.history[1:]))
    assert not np.any(r.pair.first.cells & r.pair.second.cells)


def test_two_disks_equality_case():
    d = GridDomain.wulff_union(EUC, [0.5, 0.5], 1 / 24)
    r = solve_h2(d, EUC)
    assert r.h2 == pytest.approx(4.0, rel=0.02)
    assert r.h2 >= r.bounds.h1


def test_square_above_volume_bound():
    d = GridDomain.rectangle(1.0, 1.0, 1 / 24)
    r = solve_h2(d, EUC)
    lb = lower_bounds(d, EUC, r.bounds.h1)
    assert r.h2 >= lb.volume
    assert lb.volume == pytest.approx(2 * np.sqrt(2 * np.pi), rel=1e-12)
    assert all(r.connected)


def test_halfplane_splits_partition_mask():
    d = GridDomain.wulff(QUAD, 1.0, 1 / 16)
    for a, b in halfplane_splits(d, 6):
        assert np.array_equal(a | b, d.mask)
        assert not np.any(a & b)
        assert abs(int(a.sum()) - int(b.sum())) <= 1


def test_hk_three_disks():
    d = GridDomain.wulff_union(EUC, [0.5, 0.5, 0.5], 1 / 32)
    r = solve_hk(d, EUC, 3)
    assert len(r.sets) == 3
    assert r.value == pytest.approx(4.0, rel=0.05)
    assert r.satisfies_bound

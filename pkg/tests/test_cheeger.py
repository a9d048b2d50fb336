import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import EUC, QUAD
from wulfflab.cheeger import (brute_force_h1, cheeger_touches_boundary, convex_planar_h1_oracle,
                              solve_h1, subsets_of)
from wulfflab.config import SolverConfig
from wulfflab.errors import NotConvex, TooLarge
from wulfflab.geometry import GridDomain, GridSubset, Polygon, grid_set_perimeter_F, regular_polygon


def _tiny(m):
    m = np.pad(m, 1)
    return GridDomain(m, 0.25)


tiny_masks = arrays(bool, (5, 5), elements=st.booleans()).filter(lambda m: 2 <= m.sum() <= 14)


@settings(max_examples=15)
@given(tiny_masks, st.sampled_from([EUC, QUAD]))
def test_solver_matches_brute_force(m, F):
    d = _tiny(m)
    a, b = solve_h1(d, F), brute_force_h1(d, F)
    assert a.h1 == pytest.approx(b.h1, rel=1e-12)


@settings(max_examples=10)
@given(arrays(bool, (3, 3), elements=st.booleans()).filter(lambda m: 1 <= m.sum() <= 7))
def test_brute_force_is_the_minimum_ratio(m):
    d = _tiny(m)
    best = min(grid_set_perimeter_F(GridSubset(d, c), EUC) / GridSubset(d, c).measure
               for c in subsets_of(d.mask))
    assert brute_force_h1(d, EUC).h1 == pytest.approx(best, rel=1e-12)


def test_brute_force_limit():
    d = GridDomain.rectangle(1.0, 1.0, 0.2)
    with pytest.raises(TooLarge):
        brute_force_h1(d, EUC)


def test_h1_below_domain_ratio():
    d = GridDomain.from_polygon(Polygon(((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2))), 1 / 16)
    r = solve_h1(d, EUC)
    assert r.h1 <= grid_set_perimeter_F(d.full(), EUC) / d.measure + 1e-12
    assert cheeger_touches_boundary(r)
    # the stored history never increases
    hs = [row[0] for row in r.history]
    assert all(b <= a + 1e-12 for a, b in zip(hs, hs[1:]))


@pytest.mark.parametrize("F, R", [(EUC, 1.0), (QUAD, 0.5)])
def test_wulff_shape_is_its_own_cheeger_set(F, R):
    d = GridDomain.wulff(F, R, 1 / 32)
    r = solve_h1(d, F)
    assert r.h1 == pytest.approx(2 / R, rel=0.01)
    assert r.set.count >= 0.97 * d.cell_count


def test_square_against_exact():
    r = solve_h1(GridDomain.rectangle(1.0, 1.0, 1 / 64), EUC)
    assert r.h1 == pytest.approx(2 + np.sqrt(np.pi), rel=5e-3)


def test_oracle_square_and_polygons():
    sq = Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))
    assert convex_planar_h1_oracle(sq, EUC) == pytest.approx(2 + np.sqrt(np.pi), rel=1e-10)
    # a fine regular polygon is nearly a disk, whose Cheeger constant is 2/R
    assert convex_planar_h1_oracle(regular_polygon(400, 1.0), EUC) == pytest.approx(2.0, rel=1e-3)
    # rectangle a x b: (4 - pi) / (a + b - sqrt((a - b)^2 + pi a b))
    a, b = 2.0, 1.0
    exact = (4 - np.pi) / (a + b - np.sqrt((a - b) ** 2 + np.pi * a * b))
    rect = Polygon(((0, 0), (a, 0), (a, b), (0, b)))
    assert convex_planar_h1_oracle(rect, EUC) == pytest.approx(exact, rel=1e-10)
    with pytest.raises(NotConvex):
        convex_planar_h1_oracle(Polygon(((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2))), EUC)


def test_oracle_scales_inversely():
    sq = Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))
    big = Polygon(((0, 0), (3, 0), (3, 3), (0, 3)))
    assert convex_planar_h1_oracle(big, QUAD) == pytest.approx(convex_planar_h1_oracle(sq, QUAD) / 3, rel=1e-10)


def test_forward_relaxation_runs():
    d = GridDomain.rectangle(1.0, 1.0, 1 / 16)
    r = solve_h1(d, EUC, SolverConfig(relaxation="forward"))
    assert r.relaxation == "forward"
    assert 3.5 < r.h1 < 4.5


def test_restricted_mask():
    d = GridDomain.rectangle(2.0, 1.0, 1 / 16)
    left = d.mask & (d.centers()[..., 0] < 1.0)
    r = solve_h1(d, EUC, mask=left)
    assert not np.any(r.set.cells & ~left)
    assert r.h1 == pytest.approx(2 + np.sqrt(np.pi), rel=0.03)  # coarse grid
    with pytest.raises(ValueError):
        solve_h1(d, EUC, mask=np.zeros_like(d.mask))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import jn_zeros

from conftest import EUC, QUAD, norms
from wulfflab.config import SolverConfig
from wulfflab.eigen import RayleighQuotient, radial_lambda1, solve_lambda1, solve_lambda2, sweep_p
from wulfflab.errors import InvalidP
from wulfflab.geometry import GridDomain


@settings(max_examples=25)
@given(norms(), st.sampled_from([1.2, 1.5, 2.0, 3.0]), st.integers(0, 2**31 - 1))
def test_rayleigh_gradient_matches_finite_differences(F, p, seed):
    rng = np.random.default_rng(seed)
    d = GridDomain.rectangle(1.0, 0.75, 0.125)
    rq = RayleighQuotient(d, F, p, 0.1)
    x = rng.random(rq.size) + 0.1
    v = rng.standard_normal(rq.size)
    _, g = rq(x)
    t = 1e-6
    fd = (rq(x + t * v)[0] - rq(x - t * v)[0]) / (2 * t)
    assert g @ v == pytest.approx(fd, rel=1e-5, abs=1e-8)


@given(st.floats(0.1, 10.0))
def test_rayleigh_is_scale_invariant(c):
    d = GridDomain.rectangle(1.0, 1.0, 0.125)
    rq = RayleighQuotient(d, QUAD, 1.7, 0.0)
    x = np.linspace(0.1, 1.0, rq.size)
    assert rq.value(c * x) == pytest.approx(rq.value(x), rel=1e-10)


def test_radial_oracle_p2():
    assert radial_lambda1(2.0) == pytest.approx(jn_zeros(0, 1)[0] ** 2, rel=1e-9)
    assert radial_lambda1(2.0, R=2.0) == pytest.approx(jn_zeros(0, 1)[0] ** 2 / 4, rel=1e-9)
    # n = 3, p = 2: the first zero of sin(r)/r is pi
    assert radial_lambda1(2.0, n=3) == pytest.approx(np.pi**2, rel=1e-8)


def test_radial_oracle_tends_to_cheeger():
    # lambda1(p) decreases toward h = n / R = 2 as p decreases to 1
    vals = [radial_lambda1(p) for p in (1.5, 1.2, 1.1)]
    assert vals[0] > vals[1] > vals[2] > 2.0


def test_invalid_p():
    d = GridDomain.rectangle(1.0, 1.0, 0.25)
    for p in (1.0, 0.5, 5.0):
        with pytest.raises(InvalidP):
            solve_lambda1(d, EUC, p)


def test_disk_p2_eigenvalue():
    d = GridDomain.wulff(EUC, 1.0, 1 / 32)
    r = solve_lambda1(d, EUC, 2.0)
    assert r.lam == pytest.approx(radial_lambda1(2.0), rel=0.03)
    u = r.eigenfunction.values
    assert np.all(u[d.mask] >= 0)
    assert r.eigenfunction.lp_norm(2.0) == pytest.approx(1.0, rel=1e-8)


def test_quadratic_wulff_scales_like_disk():
    # the Wulff shape of F(x) = |A^(1/2) x| is an affine image of the disk; for p = 2 lambda1 is
    # the Dirichlet eigenvalue of the ellipse in the metric, i.e. j0^2 again
    d = GridDomain.wulff(QUAD, 1.0, 1 / 24)
    r = solve_lambda1(d, QUAD, 2.0)
    assert r.lam == pytest.approx(radial_lambda1(2.0), rel=0.05)


def test_lambda2_two_equal_disks():
    d = GridDomain.wulff_union(EUC, [1.0, 1.0], 1 / 12)
    cfg = SolverConfig()
    r1 = solve_lambda1(d, EUC, 2.0, cfg)
    r2 = solve_lambda2(d, EUC, 2.0, cfg)
    assert r2.lam >= r1.lam * (1 - 1e-6)
    assert r2.lam == pytest.approx(r1.lam, rel=0.02)
    assert r2.nodal is not None


def test_sweep_validation():
    d = GridDomain.rectangle(1.0, 1.0, 0.25)
    with pytest.raises(ValueError):
        sweep_p(d, EUC, [1.2, 1.5])
    with pytest.raises(InvalidP):
        sweep_p(d, EUC, [1.5, 1.01])

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import EUC, QUAD, nonzero_vectors, norms
from wulfflab.errors import ConfigError
from wulfflab.norms import (NormDescriptor, kappa, polar_eval_numeric, verify_identities,
                            wulff_measure, wulff_perimeter)


@given(norms(), nonzero_vectors(), st.floats(0.01, 100))
def test_homogeneity(F, x, t):
    assert np.isclose(F(t * x), t * F(x), rtol=1e-12)
    assert np.isclose(F(-x), F(x), rtol=1e-12)


@given(norms(), nonzero_vectors(), nonzero_vectors())
def test_triangle_and_cauchy_schwarz(F, x, y):
    assert F(x + y) <= F(x) + F(y) + 1e-9
    # |<x, y>| <= F(x) F°(y)
    assert abs(x @ y) <= F(x) * F.polar(y) * (1 + 1e-9)


@given(norms(), nonzero_vectors())
def test_gradient_identities(F, x):
    g = F.grad(x)
    assert np.isclose(g @ x, F(x), rtol=1e-10)
    assert np.isclose(F.polar(g), 1.0, rtol=1e-9)


@given(norms(), nonzero_vectors())
def test_polar_matches_numeric_sup(F, v):
    assert np.isclose(F.polar(v), polar_eval_numeric(F, v), rtol=1e-6)


@given(norms(), nonzero_vectors())
def test_norm_equivalence_constants(F, x):
    r = F(x) / np.linalg.norm(x)
    assert F.a * (1 - 1e-9) <= r <= F.b * (1 + 1e-9)


@pytest.mark.parametrize("F", [EUC, QUAD, NormDescriptor.lq(3.0, [1.0, 2.0])])
def test_identity_suite(F):
    assert verify_identities(F, 300, seed=1).passes()


def test_kappa_values():
    assert np.isclose(kappa(EUC), np.pi, rtol=1e-12)
    # Wulff shape {F° <= 1} of diag(4, 1) is an ellipse with semi-axes 2 and 1
    assert np.isclose(kappa(QUAD), 2 * np.pi, rtol=1e-10)


@given(st.floats(0.1, 5.0))
def test_wulff_perimeter_formula(r):
    for F in (EUC, QUAD):
        assert np.isclose(wulff_perimeter(F, r), 2 * kappa(F) * r, rtol=1e-8)
        assert np.isclose(wulff_measure(F, r), kappa(F) * r**2, rtol=1e-8)


def test_bad_specs():
    with pytest.raises(ConfigError) as e:
        NormDescriptor.from_json({"kind": "spline"})
    assert e.value.field == "kind"
    with pytest.raises(ConfigError):
        NormDescriptor.from_json({"kind": "quadratic"})
    with pytest.raises(Exception):
        NormDescriptor.quadratic([[1.0, 2.0], [2.0, 1.0]])  # indefinite


def test_json_roundtrip():
    for F in (EUC, QUAD, NormDescriptor.lq(3.0, [1.0, 2.0])):
        G = NormDescriptor.from_json(F.to_json())
        x = np.array([0.3, -1.7])
        assert np.isclose(F(x), G(x))

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hilding.lp_core import (
    DegenerateBasisError,
    Exponent,
    Space,
    SubspaceBasis,
    lp_norm,
    sphere_sample,
    spans_equal,
    subspace_distance,
    vec_norm,
)

EXPONENTS = [1.0, 1.5, 2.0, 3.0, math.inf]


def test_vec_norm_examples():
    assert vec_norm([3, 4], 2) == 5.0
    assert vec_norm([1, -1], 1) == 2.0
    assert vec_norm([1, -2, 0.5], "inf") == 2.0


def test_exponent_parsing():
    assert Exponent.parse("inf").is_inf
    assert Exponent.parse(3).p == 3.0
    assert str(Exponent.parse(math.inf)) == "inf"
    assert str(Exponent.parse(1.5)) == "1.5"
    assert Exponent.parse(1).conjugate.is_inf
    assert Exponent.parse(3).conjugate.p == pytest.approx(1.5)
    for bad in ("Infinity", "1e400", "0.5", "nan"):
        with pytest.raises(ValueError):
            Exponent.parse(bad)


def test_sphere_sample_contains_canonical_directions():
    pts = sphere_sample(Space(2, Exponent.parse(2)), 4, seed=9)
    rows = {tuple(r) for r in pts.tolist()}
    assert rows == {(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)}


@pytest.mark.parametrize("p", EXPONENTS)
def test_sphere_sample_unit_and_deterministic(p):
    space = Space(5, Exponent.parse(p))
    a = sphere_sample(space, 500, seed=3)
    b = sphere_sample(space, 500, seed=3)
    assert np.array_equal(a, b)
    assert np.abs(lp_norm(a.T, p) - 1.0).max() <= 1e-14
    c = sphere_sample(space, 500, seed=4)
    assert not np.array_equal(a, c)


def test_subspace_distance_examples():
    X2, X3 = Space(2, Exponent.parse(2)), Space(3, Exponent.parse(1))
    assert subspace_distance([1, 0], SubspaceBasis.from_vectors([[1, 0]], X2)) == pytest.approx(0.0, abs=1e-15)
    assert subspace_distance([0, 1], SubspaceBasis.from_vectors([[1, 0]], X2)) == pytest.approx(1.0)
    B = SubspaceBasis.from_vectors([[1, 0, 0], [0, 1, 0]], X3)
    assert subspace_distance([1, 1, 1], B) == pytest.approx(1.0)


def test_degenerate_basis_rejected():
    X = Space(3, Exponent.parse(2))
    with pytest.raises(DegenerateBasisError):
        SubspaceBasis.from_vectors([[1, 1, 0], [2, 2, 0]], X)
    with pytest.raises(DegenerateBasisError):
        SubspaceBasis.from_vectors([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], X)
    with pytest.raises(ValueError):
        SubspaceBasis.from_vectors([[1, 0]], X)


def test_spans_equal():
    X = Space(3, Exponent.parse(2))
    a = SubspaceBasis.from_vectors([[1, 0, 0], [0, 1, 0]], X)
    b = SubspaceBasis.from_vectors([[1, 1, 0], [1, -1, 0]], X)
    c = SubspaceBasis.from_vectors([[1, 0, 0], [0, 0, 1]], X)
    assert spans_equal(a, b)[0]
    assert not spans_equal(a, c)[0]


def test_space_with_basis_pushes_norm_through():
    X = Space(3, Exponent.parse(1))
    basis = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    Y = Space(2, X.exp, basis=basis)
    assert Y.norm(np.array([1.0, 1.0])) == pytest.approx(4.0)
    assert Y.embedded


@pytest.mark.parametrize("p", EXPONENTS)
def test_norm_axioms_on_random_triples(p):
    rng = np.random.default_rng(17)
    x, y = rng.standard_normal((2, 7, 10_000))
    t = rng.standard_normal(10_000)
    nx, ny = lp_norm(x, p), lp_norm(y, p)
    assert np.all(lp_norm(x + y, p) <= (nx + ny) * (1 + 1e-12))
    assert np.allclose(lp_norm(t * x, p), np.abs(t) * nx, rtol=1e-12)
    assert np.all(nx > 0)
    assert lp_norm(np.zeros(7), p) == 0.0


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 6, elements=st.floats(-1e6, 1e6)))
def test_norm_monotone_in_p(x):
    vals = [vec_norm(x, p) for p in EXPONENTS]
    for a, b in zip(vals, vals[1:]):
        assert a >= b * (1 - 1e-12)


@settings(max_examples=200, deadline=None)
@given(
    arrays(np.float64, 5, elements=st.floats(-1e3, 1e3)),
    st.sampled_from(EXPONENTS),
)
def test_norm_zero_iff_zero(x, p):
    assert (vec_norm(x, p) == 0.0) == (not np.any(x))

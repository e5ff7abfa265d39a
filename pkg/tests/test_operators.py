from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hilding.lp_core import Exponent, Space, SubspaceBasis, lp_norm, sphere_sample
from hilding.operators import (
    BoundInterval,
    Operator,
    UnsupportedConfigurationError,
    codim,
    embedding,
    factor_bound,
    kernel_basis,
    min_gain_bounds,
    numeric_rank,
    op_norm_bounds,
    range_basis,
    restrict,
)
from hilding.policy import NumericPolicy
from hilding.search import NormCombo, NormTerm, ratio_search

PHI = (1 + math.sqrt(5)) / 2
SHEAR = [[1.0, 1.0], [0.0, 1.0]]


def _dense_ratio_max(a, p, count=200_000, seed=0):
    """Oracle: best ratio over a dense random sample of the sphere."""
    space = Space(a.shape[1], Exponent.parse(p))
    pts = sphere_sample(space, count, seed).T
    return float(lp_norm(a @ pts, p).max())


@pytest.mark.parametrize("p", [1, 1.5, 2, 3, "inf"])
@pytest.mark.parametrize("n", [1, 3, 5])
def test_identity_norm_and_gain(p, n):
    I = Operator.from_matrix(np.eye(n), p)
    b, g = op_norm_bounds(I), min_gain_bounds(I)
    assert b.lower == pytest.approx(1.0) and b.upper == pytest.approx(1.0)
    assert g.lower == pytest.approx(1.0) and g.upper == pytest.approx(1.0)


def test_shear_norms():
    b1 = op_norm_bounds(Operator.from_matrix(SHEAR, 1))
    assert (b1.lower, b1.upper, b1.exact) == (2.0, 2.0, True)
    b2 = op_norm_bounds(Operator.from_matrix(SHEAR, 2))
    assert b2.exact and b2.lower == pytest.approx(PHI, abs=1e-14)
    b3 = op_norm_bounds(Operator.from_matrix(SHEAR, 3))
    assert b3.upper == pytest.approx(2.0)
    oracle = _dense_ratio_max(np.array(SHEAR), 3)
    assert oracle <= b3.lower * (1 + 1e-12)
    assert b3.lower <= b3.upper
    assert b3.lower == pytest.approx(oracle, rel=1e-4)


def test_min_gain_examples():
    g = min_gain_bounds(Operator.from_matrix(np.diag([1.0, 2.0]), 2))
    assert g.exact and g.lower == pytest.approx(1.0)
    z = min_gain_bounds(Operator.from_matrix([[1.0, 0.0], [2.0, 0.0]], 3))
    assert (z.lower, z.upper, z.exact) == (0.0, 0.0, True)


@pytest.mark.parametrize("p", [1, 1.5, 3, "inf"])
def test_min_gain_encloses_dense_minimum(p):
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 3)) + 2 * np.eye(3)
    g = min_gain_bounds(Operator.from_matrix(a, p))
    pts = sphere_sample(Space(3, Exponent.parse(p)), 100_000, 1).T
    sampled = float(lp_norm(a @ pts, p).min())
    assert g.lower <= sampled * (1 + 1e-12)
    assert g.upper <= sampled * (1 + 1e-9)


def test_rank_kernel_range_examples():
    I = Operator.from_matrix(np.eye(4), 2)
    assert numeric_rank(I) == 4 and kernel_basis(I).size == 0
    Z = Operator.from_matrix(np.zeros((3, 3)), 1)
    assert numeric_rank(Z) == 0 and kernel_basis(Z).size == 3
    A = Operator.from_matrix([[1.0, 2.0], [2.0, 4.0]], "inf")
    assert numeric_rank(A) == 1
    k = kernel_basis(A).matrix[:, 0]
    assert np.allclose(k / k[1], [-2.0, 1.0])
    assert np.abs(A.matrix @ k).max() <= 1e-15


def test_codim_examples():
    X3, X2 = Space(3, Exponent.parse(2)), Space(2, Exponent.parse(2))
    assert codim(SubspaceBasis(np.eye(3), X3), X3) == 0
    assert codim(SubspaceBasis.from_vectors([[1, 0, 0]], X3), X3) == 2
    # raw spanning sets may be dependent
    assert codim(np.array([[1.0, 2.0], [1.0, 2.0]]), X2) == 1


def test_restrict_examples():
    X = Space(3, Exponent.parse(2))
    Y = SubspaceBasis.from_vectors([[1, 0, 0], [0, 1, 0]], X)
    R = restrict(Operator.from_matrix(np.diag([1.0, 2.0, 3.0]), 2), Y)
    assert np.array_equal(R.matrix, [[1, 0], [0, 2], [0, 0]])
    E = restrict(Operator.identity(X), Y)
    assert np.array_equal(E.matrix, embedding(Y).matrix)
    assert op_norm_bounds(E).lower == pytest.approx(1.0)


def test_restricted_projection_bound_is_tight_in_l1():
    # the norm of the coordinate map of Y, measured in the ambient l1 norm
    X = Space(4, Exponent.parse(1))
    Y = SubspaceBasis.from_vectors([[1, 1, 0, 0], [0, 0, 1, 1]], X)
    R = restrict(Operator.identity(X), Y)
    b = op_norm_bounds(R)
    assert b.upper == pytest.approx(1.0, abs=1e-9)


def test_mixed_exponents_rejected():
    A = Operator(np.eye(2), Space(2, Exponent.parse(1)), Space(2, Exponent.parse(2)))
    with pytest.raises(UnsupportedConfigurationError):
        op_norm_bounds(A)


def test_bound_interval_invariants():
    with pytest.raises(ValueError):
        BoundInterval(2.0, 1.0)
    assert BoundInterval(1.0, 1.0 - 1e-12).upper == 1.0
    assert BoundInterval(1.0, 5.0, exact=True).upper == 1.0
    assert BoundInterval(0.5, math.inf).contains(10.0)


def test_factor_bound_shared_kernel():
    s = np.array([[1.0, 0.0], [0.0, 0.0]])
    # t = 2 s; G = -I works, so the bound is 1
    assert factor_bound(s - 2 * s, s, 2) == pytest.approx(1.0)
    assert math.isinf(factor_bound(np.array([[0.0, 1.0], [0.0, 0.0]]), s, 2))


def test_search_is_deterministic_and_respects_seed():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((4, 4))
    space = Space(4, Exponent.parse(3))
    num = NormCombo([NormTerm(1.0, a, space)])
    den = NormCombo([NormTerm(1.0, None, space)])
    r1 = ratio_search(num, den, space, policy=NumericPolicy(seed=5))
    r2 = ratio_search(num, den, space, policy=NumericPolicy(seed=5))
    assert r1.value == r2.value and np.array_equal(r1.x, r2.x)
    assert r1.value <= op_norm_bounds(Operator.from_matrix(a, 3)).upper


@pytest.mark.parametrize("p", [1.0, "inf"])
def test_duality_l1_linf(p):
    rng = np.random.default_rng(8)
    for _ in range(50):
        a = rng.standard_normal(tuple(rng.integers(1, 6, 2)))
        one = op_norm_bounds(Operator.from_matrix(a, 1)).lower
        inf = op_norm_bounds(Operator.from_matrix(a.T, "inf")).lower
        assert one == pytest.approx(inf, rel=1e-12)


matrices = st.integers(1, 5).flatmap(
    lambda m: st.integers(1, 5).flatmap(
        lambda n: arrays(np.float64, (m, n), elements=st.floats(-10, 10, allow_subnormal=False))
    )
)


@settings(max_examples=60, deadline=None)
@given(matrices, st.sampled_from([1, 2, "inf"]))
def test_rank_nullity_and_codim_of_range(a, p):
    A = Operator.from_matrix(a, p)
    r = numeric_rank(A)
    assert r + kernel_basis(A).size == a.shape[1]
    assert codim(range_basis(A), A.codomain) == a.shape[0] - r


@settings(max_examples=40, deadline=None)
@given(matrices, st.sampled_from([1, 2, "inf"]))
def test_exact_norms_match_closed_forms(a, p):
    b = op_norm_bounds(Operator.from_matrix(a, p))
    closed = {1: np.abs(a).sum(axis=0).max(), 2: np.linalg.norm(a, 2), "inf": np.abs(a).sum(axis=1).max()}[p]
    assert b.exact
    assert b.lower == pytest.approx(closed, rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(matrices, st.sampled_from([1, 2, "inf"]))
def test_restriction_rank_inequality(a, p):
    A = Operator.from_matrix(a, p)
    k = max(1, a.shape[1] - 1)
    Y = SubspaceBasis(np.eye(a.shape[1])[:, :k], A.domain)
    assert numeric_rank(restrict(A, Y)) <= min(numeric_rank(A), k)

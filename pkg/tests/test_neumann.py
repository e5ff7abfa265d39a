from __future__ import annotations

import numpy as np
import pytest

from conftest import certified_identity_pair, scaled_perturbation
from hilding.certificates import HildingCertificate, PreconditionError
from hilding.neumann import certified_surjective, neumann_inverse, neumann_solve, terms_needed
from hilding.operators import Operator, op_norm_bounds


def test_identity_needs_no_terms():
    res = neumann_inverse(Operator.from_matrix(np.eye(3), 2), tol=1e-9)
    assert res.terms_used == 0 and res.q == 0.0 and res.error_bound <= 1e-9
    assert np.array_equal(res.approx_inverse.matrix, np.eye(3))


def test_half_identity():
    res = neumann_inverse(Operator.from_matrix(0.5 * np.eye(2), 1), tol=1e-6)
    assert res.terms_used == 20
    assert res.error_bound == pytest.approx(0.5 ** 21 / 0.5)
    assert np.allclose(res.approx_inverse.matrix, 2 * np.eye(2), atol=2e-6)


def test_terms_needed_is_minimal():
    for q in (0.1, 0.5, 0.9, 0.99):
        for tol in (1e-3, 1e-9, 1e-14):
            n = terms_needed(q, tol)
            assert q ** (n + 1) / (1 - q) <= tol
            assert n == 0 or q ** n / (1 - q) > tol


def test_monotone_refinement():
    rng = np.random.default_rng(1)
    T = Operator.from_matrix(np.eye(6) - scaled_perturbation(rng, 6, 6, "inf", 0.4), "inf")
    prev = None
    for tol in (1e-2, 1e-5, 1e-8, 1e-12):
        r = neumann_inverse(T, tol)
        if prev is not None:
            assert r.terms_used >= prev.terms_used and r.error_bound <= prev.error_bound
        prev = r


@pytest.mark.parametrize("p", [1, 2, 3, "inf"])
def test_inverse_within_error_bound(p):
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(1, 12))
        T = Operator.from_matrix(np.eye(n) - scaled_perturbation(rng, n, n, p, 0.5), p)
        res = neumann_inverse(T, 1e-10)
        diff = Operator.from_matrix(np.linalg.inv(T.matrix) - res.approx_inverse.matrix, p)
        assert op_norm_bounds(diff).lower <= res.error_bound + 1e-12


def test_refuses_without_contraction():
    with pytest.raises(PreconditionError):
        neumann_inverse(Operator.from_matrix(np.diag([3.0, 1.0]), 2))
    with pytest.raises(PreconditionError):
        neumann_inverse(Operator.from_matrix(np.ones((2, 3)), 2))


def test_solve():
    I = Operator.from_matrix(np.eye(3), 2)
    b = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(neumann_solve(I, b), b)
    half = Operator.from_matrix(0.5 * np.eye(2), 2)
    assert np.allclose(neumann_solve(half, [1.0, 0.0], 1e-10), [2.0, 0.0], atol=1e-10)
    rng = np.random.default_rng(3)
    T = Operator.from_matrix(np.eye(5) - scaled_perturbation(rng, 5, 5, 1, 0.3), 1)
    b = rng.standard_normal(5)
    tol = 1e-9
    y = neumann_solve(T, b, tol)
    norm_t = op_norm_bounds(T).upper
    assert np.abs(T.matrix @ y - b).sum() <= norm_t * tol * np.abs(b).sum()


def test_certified_surjective():
    rep = certified_surjective(Operator.from_matrix(np.eye(4), 2), HildingCertificate(0, 0))
    assert rep.surjective and rep.gain_floor == 1.0 and rep.consistent
    with pytest.raises(PreconditionError):
        certified_surjective(Operator.from_matrix(np.diag([1.0, 0.0]), 2), HildingCertificate(0.5, 0.5))


@pytest.mark.parametrize("p", [1, 2, 3, "inf"])
def test_hilding_chain_full_rank(p):
    rng = np.random.default_rng(4)
    for _ in range(10):
        T, c = certified_identity_pair(rng, 5, p)
        rep = certified_surjective(T, c)
        assert rep.rank == 5 and rep.surjective and rep.consistent
        assert rep.gain_floor <= rep.min_gain_lower + 1e-9

from __future__ import annotations

import numpy as np
import pytest

from conftest import certified_general_pair, certified_identity_pair, random_subspace, scaled_perturbation
from hilding.certificates import HildingCertificate, PreconditionError
from hilding.continuation import (
    ContinuationFailure,
    codim_pair,
    epsilon_step,
    fredholm_check,
    krylov_membership,
    verify_codim_preservation,
)
from hilding.lp_core import Exponent, Space, SubspaceBasis
from hilding.operators import Operator, numeric_rank


def test_epsilon_step_examples():
    assert epsilon_step(0.0, 1.0) == 0.25
    assert epsilon_step(0.5, 2.0) == pytest.approx(1 / 18)
    assert epsilon_step(0.6, 1.0) < epsilon_step(0.5, 1.0)
    assert epsilon_step(0.5, 3.0) < epsilon_step(0.5, 2.0)
    with pytest.raises(ValueError):
        epsilon_step(1.0, 1.0)


def test_identity_path_is_single_step():
    X = Space(5, Exponent.parse(1))
    Y = SubspaceBasis.from_vectors([[1, 0, 0, 0, 0], [0, 1, 1, 0, 0]], X)
    trace = verify_codim_preservation(Y, Operator.identity(X), HildingCertificate(0.0, 0.0))
    assert trace.constant_path
    assert [s.alpha for s in trace.steps] == [0.0, 1.0]
    assert trace.codim_start == trace.codim_end == 3


def test_random_five_dim_subspace_in_r10():
    rng = np.random.default_rng(10)
    X = Space(10, Exponent.parse(2))
    Y = random_subspace(rng, 10, 5, X)
    T = Operator(np.eye(10) + scaled_perturbation(rng, 10, 10, 2, 0.3), X, X)
    trace = verify_codim_preservation(Y, T, HildingCertificate(0.35, 0.0))
    assert trace.preserved and trace.codim_start == trace.codim_end == 5
    assert {s.rank for s in trace.steps} == {5}
    # independent rank oracle for T(Y)
    assert np.linalg.matrix_rank(T.matrix @ Y.matrix) == 5


@pytest.mark.parametrize("p", [1, 2, 3, "inf"])
def test_trace_invariants(p):
    rng = np.random.default_rng(12)
    X = Space(8, Exponent.parse(p))
    Y = random_subspace(rng, 8, 3, X)
    T = Operator(np.eye(8) + scaled_perturbation(rng, 8, 8, p, 0.25), X, X)
    trace = verify_codim_preservation(Y, T, HildingCertificate(0.3, 0.0))
    alphas = [s.alpha for s in trace.steps]
    assert alphas[0] == 0.0 and alphas[-1] == 1.0
    assert all(0 < b - a <= trace.epsilon for a, b in zip(alphas, alphas[1:]))
    assert all(s.sampled_min_gain >= trace.gain_floor - 1e-9 for s in trace.steps)
    assert all(s.forward_bound < 0.5 and s.backward_bound < 1.0 for s in trace.steps)


def test_refuses_unverified_certificate():
    X = Space(4, Exponent.parse(2))
    Y = SubspaceBasis.from_vectors([[1, 0, 0, 0]], X)
    T = Operator(np.diag([1.0, 1.0, 1.0, 1.0]) * 3.0, X, X)
    with pytest.raises(PreconditionError):
        verify_codim_preservation(Y, T, HildingCertificate(0.1, 0.1))


def test_failure_reports_trace():
    # a negative gain tolerance raises the floor above every gain, so each step fails
    X = Space(2, Exponent.parse(2))
    Y = SubspaceBasis(np.eye(2), X)
    T = Operator(np.eye(2) + scaled_perturbation(np.random.default_rng(0), 2, 2, 2, 0.2), X, X)
    trace = verify_codim_preservation(Y, T, HildingCertificate(0.25, 0.0), gain_tol=-1.0, raise_on_failure=False)
    assert not trace.preserved and trace.failures
    with pytest.raises(ContinuationFailure) as err:
        verify_codim_preservation(Y, T, HildingCertificate(0.25, 0.0), gain_tol=-1.0)
    assert err.value.trace is not None


def test_codim_pair_examples():
    rng = np.random.default_rng(1)
    S = Operator.from_matrix(rng.standard_normal((4, 4)), 2)
    assert codim_pair(S, S, 0.0) == (0, 0)
    E = 0.01 * rng.standard_normal((4, 4))
    T = Operator.from_matrix(S.matrix + E @ S.matrix, 2)
    assert codim_pair(S, T, 0.5) == (0, 0)
    S2, T2, c = certified_general_pair(rng, 5, 4, 2, 1)
    assert codim_pair(S2, T2, 0.5) == (3, 3)
    with pytest.raises(PreconditionError):
        codim_pair(S, Operator.from_matrix(-S.matrix, 2), 0.5)
    with pytest.raises(PreconditionError):
        codim_pair(S, S, 1.0)


def test_fredholm_examples():
    rng = np.random.default_rng(2)
    S = Operator.from_matrix(rng.standard_normal((3, 5)), 1)
    rep = fredholm_check(S, S, HildingCertificate(0.0, 0.0))
    assert rep.ok and rep.index_S == 2 and rep.rank_nullity_index == 2
    s = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 4))
    S2 = Operator.from_matrix(s, 2)
    T2 = Operator.from_matrix((np.eye(4) + 0.05 * rng.standard_normal((4, 4))) @ s, 2)
    rep2 = fredholm_check(S2, T2, HildingCertificate(0.3, 0.0))
    assert rep2.kernel_dim_S == rep2.kernel_dim_T == 2 and rep2.kernels_equal and rep2.ok
    with pytest.raises(PreconditionError):
        fredholm_check(S2, Operator.from_matrix(np.eye(4), 2), HildingCertificate(0.1, 0.1))


def test_krylov_examples():
    X = Space(3, Exponent.parse(2))
    I = Operator.identity(X)
    assert krylov_membership(I, HildingCertificate(0, 0), [1.0, 2.0, 3.0], 1, 1) == pytest.approx(0.0, abs=1e-15)
    rng = np.random.default_rng(3)
    T, c = certified_identity_pair(rng, 8, 2, symmetric=True)
    x = rng.standard_normal(8)
    assert krylov_membership(T, c, x, 1, 8) <= 1e-8
    dists = [krylov_membership(T, c, x, 1, K) for K in range(1, 9)]
    assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    with pytest.raises(ValueError):
        krylov_membership(T, c, x, 3, 2)


def test_krylov_refuses_unverified():
    T = Operator.from_matrix(np.diag([1.0, 5.0]), 2)
    with pytest.raises(PreconditionError):
        krylov_membership(T, HildingCertificate(0.1, 0.1), [1.0, 1.0], 0, 2)


def test_homotopy_ranks_constant_for_rank_oracle():
    rng = np.random.default_rng(4)
    X = Space(6, Exponent.parse("inf"))
    Y = random_subspace(rng, 6, 4, X)
    T = Operator(np.eye(6) + scaled_perturbation(rng, 6, 6, "inf", 0.4), X, X)
    verify_codim_preservation(Y, T, HildingCertificate(0.45, 0.0))
    for a in np.linspace(0, 1, 11):
        Ta = (1 - a) * np.eye(6) + a * T.matrix
        assert numeric_rank(Ta @ Y.matrix) == 4

"""Neumann-series inversion with a-priori error bounds, and certified surjectivity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certificates import HildingCertificate, PreconditionError, Status, gain_floor, verify_certificate
from .operators import Operator, min_gain_bounds, norm_upper, numeric_rank
from .policy import DEFAULT_POLICY, NumericPolicy


@dataclass(frozen=True, eq=False)
class NeumannResult:
    approx_inverse: Operator
    terms_used: int
    q: float
    error_bound: float


def _contraction_bound(T: Operator, policy: NumericPolicy) -> float:
    if not T.is_square:
        raise PreconditionError("Neumann series needs a square operator")
    q, _ = norm_upper(Operator.identity(T.domain) - T, policy)
    if not q < 1.0:
        raise PreconditionError(
            f"cannot establish ||I - T|| < 1 (sound upper bound {q!r}); "
            "try a two-parameter certificate instead"
        )
    return q


def terms_needed(q: float, tol: float, cap: int = DEFAULT_POLICY.neumann_max_terms) -> int:
    """Smallest N with q**(N+1) / (1 - q) <= tol."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if q == 0.0:
        return 0
    # start from the closed-form estimate, then correct for rounding
    n = max(0, math.ceil(math.log(tol * (1.0 - q)) / math.log(q)) - 1)
    while n > 0 and q ** n / (1.0 - q) <= tol:
        n -= 1
    while q ** (n + 1) / (1.0 - q) > tol:
        n += 1
        if n > cap:
            raise PreconditionError(f"more than {cap} Neumann terms needed")
    if n > cap:
        raise PreconditionError(f"more than {cap} Neumann terms needed")
    return n


def neumann_inverse(T: Operator, tol: float = 1e-12, policy: NumericPolicy = DEFAULT_POLICY) -> NeumannResult:
    """Partial sum of ``sum_n (I - T)^n`` accurate to ``tol`` in operator norm."""
    q = _contraction_bound(T, policy)
    n_terms = terms_needed(q, tol, policy.neumann_max_terms)
    k = np.eye(T.domain.dim) - T.matrix
    term = np.eye(T.domain.dim)
    total = term.copy()
    comp = np.zeros_like(total)
    for _ in range(n_terms):
        term = k @ term
        # Kahan-Babuska summation, entrywise
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    approx = Operator(total, T.codomain, T.domain)
    return NeumannResult(approx, n_terms, q, q ** (n_terms + 1) / (1.0 - q))


def neumann_solve(T: Operator, b, tol: float = 1e-12, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``y`` with ``||y - T^-1 b|| <= tol * ||b||``, iterating ``y <- b + (I - T) y``."""
    q = _contraction_bound(T, policy)
    b = np.asarray(b, dtype=float).ravel()
    n_terms = terms_needed(q, tol, policy.neumann_max_terms)
    k = np.eye(T.domain.dim) - T.matrix
    y = b.copy()
    for _ in range(n_terms):
        y = b + k @ y
    return y


@dataclass(frozen=True)
class SurjectivityReport:
    surjective: bool
    rank: int
    codomain_dim: int
    gain_floor: float
    min_gain_lower: float
    min_gain_upper: float
    consistent: bool


def certified_surjective(
    T: Operator,
    c: HildingCertificate,
    policy: NumericPolicy = DEFAULT_POLICY,
    consistency_tol: float = 1e-9,
) -> SurjectivityReport:
    """Surjectivity of T from a verified certificate for the pair (I, T)."""
    verdict = verify_certificate(Operator.identity(T.domain), T, c, policy)
    if verdict.status is not Status.VERIFIED:
        raise PreconditionError(f"certificate is {verdict.status.value}, not Verified; refusing")
    rank = numeric_rank(T, policy)
    floor = gain_floor(c)
    gains = min_gain_bounds(T, policy)
    # the floor is a true lower bound, so it can never exceed any upper bound;
    # against an exact interval it must not exceed the value either
    consistent = floor <= gains.upper + consistency_tol
    if gains.exact:
        consistent = consistent and floor <= gains.lower + consistency_tol
    return SurjectivityReport(
        surjective=rank == T.codomain.dim,
        rank=rank,
        codomain_dim=T.codomain.dim,
        gain_floor=floor,
        min_gain_lower=gains.lower,
        min_gain_upper=gains.upper,
        consistent=consistent,
    )


"""Two-parameter perturbation certificates.

A certificate ``(lambda1, lambda2)`` in ``[0, 1)^2`` for a pair ``S, T``
asserts ``||Sx - Tx|| <= lambda1 ||Sx|| + lambda2 ||Tx||`` for every x.
With ``S = I`` this is the classical Hilding condition on ``T``.

Verification never relies on sampling.  A certificate is *Verified* only by
one of two norm arguments, each of which implies the inequality for all x:

* comparison: ``||S - T|| <= lambda1 * gain(S) + lambda2 * gain(T)``
* factorization: ``S - T = G S = H T`` with
  ``lambda1 / ||G|| + lambda2 / ||H|| >= 1``.  Splitting ``S - T`` as
  ``theta*G*S + (1-theta)*H*T`` then bounds it pointwise.

Sampling and search are used only to *refute*, with an explicit witness.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .lp_core import Space
from .operators import Operator, factor_bound, gain_lower, norm_upper
from .policy import DEFAULT_POLICY, NumericPolicy
from .search import NormCombo, NormTerm, SearchResult, ratio_search


class CertificateError(ValueError):
    pass


class PreconditionError(ValueError):
    """An input fails a precondition that the toolkit refuses to assume."""


@dataclass(frozen=True)
class HildingCertificate:
    lambda1: float
    lambda2: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            v = float(getattr(self, name))
            if not (0.0 <= v < 1.0):
                raise CertificateError(f"{name} must lie in [0, 1), got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def lam(self) -> float:
        return max(self.lambda1, self.lambda2)

    def as_tuple(self) -> tuple[float, float]:
        return (self.lambda1, self.lambda2)


@dataclass(frozen=True)
class SandwichBounds:
    lower: float
    upper: float


class Status(enum.Enum):
    VERIFIED = "Verified"
    REFUTED = "Refuted"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class Verdict:
    status: Status
    margin: float
    witness: np.ndarray | None = None
    route: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.status is Status.REFUTED) != (self.witness is not None):
            raise ValueError("a witness is present exactly when the verdict is Refuted")

    @property
    def verified(self) -> bool:
        return self.status is Status.VERIFIED


def basic_bounds(c: HildingCertificate) -> SandwichBounds:
    """Constants of the two-sided norm comparison implied by ``c``.

    If ``||x - y|| <= l1 ||x|| + l2 ||y||`` then
    ``lower * ||y|| <= ||x|| <= upper * ||y||``.
    """
    l1, l2 = c.lambda1, c.lambda2
    return SandwichBounds((1.0 - l2) / (1.0 + l1), (1.0 + l2) / (1.0 - l1))


def gain_floor(c: HildingCertificate) -> float:
    """Lower bound on ``||Tx|| / ||x||`` when ``c`` certifies the pair (I, T)."""
    return (1.0 - c.lambda1) / (1.0 + c.lambda2)


def _check_pair(S: Operator, T: Operator):
    if not (S.domain.same_as(T.domain) and S.codomain.same_as(T.codomain)):
        raise ValueError("S and T must share domain and codomain")


def _amb_space(op: Operator) -> Space:
    return Space(op.codomain.ambient_dim, op.exp)


def _lambda_ratio(S: Operator, T: Operator) -> tuple[NormCombo, NormCombo]:
    amb = _amb_space(S)
    s = S.codomain.embed(S.matrix)
    t = T.codomain.embed(T.matrix)
    num = NormCombo([NormTerm(1.0, s - t, amb)])
    den = NormCombo([NormTerm(1.0, s, amb), NormTerm(1.0, t, amb)])
    return num, den


def _extra_starts(*mats: np.ndarray) -> np.ndarray:
    cols = []
    for m in mats:
        if m.size:
            _, _, vt = np.linalg.svd(m)
            cols.append(vt[0])
            cols.append(vt[-1])
    return np.array(cols).T if cols else None


def fit_lambda_search(S: Operator, T: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> SearchResult:
    _check_pair(S, T)
    num, den = _lambda_ratio(S, T)
    extra = _extra_starts(S.matrix - T.matrix, S.matrix, T.matrix)
    return ratio_search(num, den, S.domain, maximize=True, policy=policy, extra_starts=extra)


def fit_lambda(S: Operator, T: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Searched lower bound on ``sup ||Sx - Tx|| / (||Sx|| + ||Tx||)``.

    The ratio is taken as 0 where ``Sx = Tx = 0``.  No global optimality is
    claimed; the value is attained at a concrete vector.
    """
    return fit_lambda_search(S, T, policy).value


def verify_certificate(
    S: Operator,
    T: Operator,
    c: HildingCertificate,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> Verdict:
    """Check ``||Sx - Tx|| <= l1 ||Sx|| + l2 ||Tx||`` for all x."""
    _check_pair(S, T)
    l1, l2 = c.lambda1, c.lambda2
    diff = S - T
    upper, _ = norm_upper(diff, policy)
    g_s, _ = gain_lower(S, policy)
    g_t, _ = gain_lower(T, policy)
    slack = l1 * g_s + l2 * g_t - upper
    details = {"norm_diff_upper": upper, "gain_S_lower": g_s, "gain_T_lower": g_t}
    if slack >= 0:
        return Verdict(Status.VERIFIED, slack, route="norm-comparison", details=details)

    s = S.codomain.embed(S.matrix)
    t = T.codomain.embed(T.matrix)
    g = factor_bound(s - t, s, S.exp, policy)
    h = factor_bound(s - t, t, S.exp, policy)
    details.update({"factor_G_upper": g, "factor_H_upper": h})
    if g == 0.0 or h == 0.0:
        return Verdict(Status.VERIFIED, 1.0, route="factorization", details=details)
    budget = (l1 / g if math.isfinite(g) else 0.0) + (l2 / h if math.isfinite(h) else 0.0)
    if budget >= 1.0:
        return Verdict(Status.VERIFIED, budget - 1.0, route="factorization", details=details)

    amb = _amb_space(S)
    num = NormCombo([NormTerm(1.0, s - t, amb), NormTerm(-l1, s, amb), NormTerm(-l2, t, amb)])
    den = NormCombo([NormTerm(1.0, s, amb), NormTerm(1.0, t, amb)])
    fit = fit_lambda_search(S, T, policy)
    extra = np.column_stack([fit.x] + ([_extra_starts(s - t)] if (s - t).any() else []))
    best = ratio_search(num, den, S.domain, maximize=True, policy=policy, extra_starts=extra)
    x = best.x
    lhs = amb.norm(s @ x - t @ x)
    ns, nt = amb.norm(s @ x), amb.norm(t @ x)
    violation = lhs - (l1 * ns + l2 * nt)
    details.update({"search_violation": float(best.value), "fit_lambda": fit.value})
    if violation > policy.refute_tol * (ns + nt):
        details.update({"witness_lhs": lhs, "witness_rhs": l1 * ns + l2 * nt})
        return Verdict(Status.REFUTED, -float(violation), witness=x, route="witness", details=details)
    return Verdict(Status.INCONCLUSIVE, float(slack), route="none", details=details)


def cert_inverse(c: HildingCertificate) -> HildingCertificate:
    """Certificate for the pair (I, T^-1): the two constants swap."""
    return HildingCertificate(c.lambda2, c.lambda1)


def cert_scale(c: HildingCertificate, alpha: float) -> HildingCertificate:
    """Certificate for (I, alpha*T).

    ``alpha <= 1``: ``(1 - alpha(1 - l1), l2)``; ``alpha > 1``:
    ``(l1, (l2 + alpha - 1) / alpha)``.  Constants never drop below the input.
    """
    alpha = float(alpha)
    if not alpha > 0:
        raise CertificateError("scale factor must be positive")
    l1, l2 = c.lambda1, c.lambda2
    if alpha <= 1.0:
        return HildingCertificate(max(1.0 - alpha * (1.0 - l1), l1), l2)
    return HildingCertificate(l1, max(1.0 - (1.0 - l2) / alpha, l2))


def cert_homotopy(c: HildingCertificate, alpha: float) -> HildingCertificate:
    """Certificate for (I, (1 - alpha) I + alpha T), ``0 <= alpha <= 1``."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise CertificateError("homotopy parameter must lie in [0, 1]")
    return HildingCertificate(alpha * c.lambda1 + (1.0 - alpha) * c.lambda2, c.lambda2)


def ray_gain(c: HildingCertificate, a: float) -> float:
    """Certified lower bound on ``inf ||(aI - T)x|| / ||x||`` for ``a < 0``.

    Uses ``aI - T = -(|a| + 1) T_t`` with ``t = 1 / (|a| + 1)``.
    """
    a = float(a)
    if not a < 0:
        raise CertificateError("ray_gain needs a < 0")
    scale = abs(a) + 1.0
    h = cert_homotopy(c, 1.0 / scale)
    return scale * (1.0 - h.lambda1) / (1.0 + h.lambda2)


def _check_lambda(lam: float):
    if not 0.0 <= lam < 1.0:
        raise CertificateError(f"lambda must lie in [0, 1), got {lam!r}")


def repair_bounded(lam: float, norm_t_upper: float) -> float:
    """Smallest delta with ``||x - Tx|| <= delta (||x|| + ||Tx||)``.

    Valid when ``||x - Tx|| <= lam ||x|| + ||Tx||`` holds and ``||T||`` is at
    most ``norm_t_upper``.
    """
    _check_lambda(lam)
    if not (norm_t_upper >= 0 and math.isfinite(norm_t_upper)):
        raise CertificateError("norm bound must be finite and nonnegative")
    return (lam + norm_t_upper) / (1.0 + norm_t_upper)


def repair_inverse_bounded(lam: float, norm_tinv_upper: float) -> float:
    """As :func:`repair_bounded` for ``||x - Tx|| <= ||x|| + lam ||Tx||``,
    with the bound on ``||T^-1||`` playing the role of ``||T||``."""
    return repair_bounded(lam, norm_tinv_upper)


def inequality_violation(
    S: Operator, T: Operator, c: HildingCertificate, points: np.ndarray
) -> np.ndarray:
    """Relative violation of the certificate inequality at each column.

    Returns ``(lhs - rhs) / (||Sx|| + ||Tx||)`` (0 where both vanish);
    positive entries violate.
    """
    amb = _amb_space(S)
    s = S.codomain.embed(S.matrix) @ points
    t = T.codomain.embed(T.matrix) @ points
    ns, nt = amb.norm(s), amb.norm(t)
    lhs = amb.norm(s - t)
    scale = ns + nt
    return np.where(scale > 0, (lhs - c.lambda1 * ns - c.lambda2 * nt) / np.where(scale > 0, scale, 1.0), 0.0)


"""Dense operators between lp spaces, with sound norm and gain enclosures.

``op_norm_bounds`` and ``min_gain_bounds`` return intervals that contain the
true value.  For p in {1, 2, inf} the operator norm has a closed form and the
interval is a point; for other p the upper end comes from Riesz-Thorin
interpolation between the l1 and l-infinity norms and the lower end from a
sphere search.  Downstream sufficiency checks only ever use the sound side
(``upper`` of a norm, ``lower`` of a gain).

Operators whose domain is a subspace (see :func:`restrict`) are bounded by
extending them to the whole ambient space: any ``G`` with ``G @ B = A`` agrees
with the operator on ``span(B)``, so ``||G||`` is an upper bound.  The
pseudo-inverse extension is exact for p = 2; for p in {1, inf} a small linear
program finds the minimal-norm extension (exact for p = inf, where every
operator extends without increasing its norm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .lp_core import Exponent, ExponentLike, Space, SubspaceBasis, rank_threshold
from .policy import DEFAULT_POLICY, NumericPolicy
from .search import NormCombo, NormTerm, ratio_search


class UnsupportedConfigurationError(ValueError):
    """Raised for operator pairs or spaces this toolkit does not handle."""


@dataclass(frozen=True, eq=False)
class Operator:
    """A real ``m x n`` matrix acting from ``domain`` (dim n) to ``codomain`` (dim m)."""

    matrix: np.ndarray
    domain: Space
    codomain: Space

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        if a.ndim != 2:
            raise ValueError("operator matrix must be 2-D")
        if a.shape != (self.codomain.dim, self.domain.dim):
            raise ValueError(
                f"matrix shape {a.shape} does not match spaces "
                f"({self.codomain.dim} x {self.domain.dim})"
            )
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @classmethod
    def from_matrix(cls, matrix, p: ExponentLike) -> "Operator":
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        exp = Exponent.parse(p)
        return cls(a, Space(a.shape[1], exp), Space(a.shape[0], exp))

    @classmethod
    def identity(cls, space: Space) -> "Operator":
        return cls(np.eye(space.dim), space, space)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def exp(self) -> Exponent:
        return self.domain.exp

    @property
    def is_square(self) -> bool:
        return self.domain.same_as(self.codomain)

    def __call__(self, x):
        return self.matrix @ np.asarray(x, dtype=float)

    def _check_compatible(self, other: "Operator"):
        if not (self.domain.same_as(other.domain) and self.codomain.same_as(other.codomain)):
            raise ValueError("operators act between different spaces")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_compatible(other)
        return Operator(self.matrix + other.matrix, self.domain, self.codomain)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_compatible(other)
        return Operator(self.matrix - other.matrix, self.domain, self.codomain)

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, self.domain, self.codomain)

    def scaled(self, alpha: float) -> "Operator":
        return Operator(alpha * self.matrix, self.domain, self.codomain)

    def __rmul__(self, alpha: float) -> "Operator":
        return self.scaled(float(alpha))

    def __matmul__(self, other: "Operator") -> "Operator":
        if other.codomain.dim != self.domain.dim or other.codomain.exp != self.domain.exp:
            raise ValueError("cannot compose: codomain/domain mismatch")
        return Operator(self.matrix @ other.matrix, other.domain, self.codomain)

    def shifted(self, alpha: float) -> "Operator":
        """``alpha*I - self`` (square operators only)."""
        if not self.is_square:
            raise ValueError("shift needs a square operator")
        return Operator(alpha * np.eye(self.domain.dim) - self.matrix, self.domain, self.codomain)

    def inverse(self) -> "Operator":
        if not self.is_square:
            raise ValueError("only square operators are inverted")
        return Operator(np.linalg.inv(self.matrix), self.codomain, self.domain)


@dataclass(frozen=True)
class BoundInterval:
    lower: float
    upper: float
    exact: bool = False

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if lo < 0 or math.isnan(lo) or math.isnan(hi):
            raise ValueError("bounds must be nonnegative numbers")
        # an attained search value can only exceed a sound upper bound by rounding
        if hi < lo:
            if hi < lo * (1 - 1e-9):
                raise ValueError(f"lower bound {lo!r} exceeds upper bound {hi!r}")
            hi = lo
        if self.exact:
            hi = lo
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, value: float, rel: float = 0.0) -> bool:
        slack = rel * max(abs(value), 1.0)
        return self.lower - slack <= value <= self.upper + slack

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _require_same_exponent(op: Operator):
    if op.domain.exp != op.codomain.exp:
        raise UnsupportedConfigurationError(
            f"mixed exponents l{op.domain.exp} -> l{op.codomain.exp} are not supported"
        )


def _ambient_matrix(op: Operator) -> np.ndarray:
    """Matrix into the ambient codomain coordinates."""
    return op.codomain.embed(op.matrix)


def plain_norm(m: np.ndarray, exp: Exponent) -> tuple[float, bool]:
    """lp -> lp norm of a matrix on full coordinate spaces: (upper, exact)."""
    if m.size == 0:
        return 0.0, True
    a = np.abs(m)
    n1 = float(a.sum(axis=0).max())
    ninf = float(a.sum(axis=1).max())
    if exp.p == 1.0:
        return n1, True
    if exp.is_inf:
        return ninf, True
    if exp.p == 2.0:
        return float(np.linalg.norm(m, 2)), True
    if n1 == 0.0 or ninf == 0.0:
        return 0.0, True
    return n1 ** (1.0 / exp.p) * ninf ** (1.0 - 1.0 / exp.p), False


def _lp_extension(target: np.ndarray, base: np.ndarray, exp: Exponent) -> np.ndarray | None:
    """Minimize ||G||_p subject to G @ base = target, for p in {1, inf}.

    Returns None when the program is too large or the solver fails.
    """
    r, k = target.shape
    s = base.shape[0]
    if r * s > 2500:
        return None
    if exp.is_inf:
        # rows decouple: each row is a basis-pursuit problem
        a_eq = np.hstack([base.T, -base.T])
        g = np.zeros((r, s))
        for i in range(r):
            res = linprog(np.ones(2 * s), A_eq=a_eq, b_eq=target[i], bounds=(0, None), method="highs")
            if res.status != 0:
                return None
            g[i] = res.x[:s] - res.x[s:]
        return g
    # p = 1: minimize the largest column sum t
    nv = r * s
    kron = np.kron(np.eye(r), base.T)
    a_eq = np.hstack([kron, -kron, np.zeros((r * k, 1))])
    col = np.zeros((s, nv))
    for j in range(s):
        col[j, j::s] = 1.0
    a_ub = np.hstack([col, col, -np.ones((s, 1))])
    cost = np.zeros(2 * nv + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=a_ub, b_ub=np.zeros(s), A_eq=a_eq, b_eq=target.ravel(),
                  bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    return (res.x[:nv] - res.x[nv : 2 * nv]).reshape(r, s)


def factor_bound(target: np.ndarray, base: np.ndarray, exp: ExponentLike,
                 policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Sound upper bound on ``sup ||target c|| / ||base c||`` over ``base c != 0``.

    Any ``G`` with ``G @ base = target`` gives ``||target c|| <= ||G|| ||base c||``.
    Candidates are the pseudo-inverse solution and, for p in {1, inf}, the
    minimal-norm solution of a linear program.  The residual of an inexact
    ``G`` is charged through a left inverse of ``base`` when ``base`` has
    full column rank.  Returns inf when ``target`` does not vanish on the
    kernel of ``base``.
    """
    exp = Exponent.parse(exp)
    target = np.asarray(target, dtype=float)
    base = np.asarray(base, dtype=float)
    if not np.any(target):
        return 0.0
    if np.array_equal(target, base):
        return 1.0
    k = base.shape[1]
    rank = numeric_rank(base, policy)
    if rank == 0:
        return math.inf
    full = rank == k
    left = np.linalg.pinv(base, rcond=policy.rank_tol * max(base.shape))
    left_norm = plain_norm(left, exp)[0] if full else math.inf
    candidates = [target @ left]
    if exp.p == 1.0 or exp.is_inf:
        g = _lp_extension(target, base, exp)
        if g is not None:
            candidates.append(g)
    best = math.inf
    scale = np.linalg.norm(target) + np.linalg.norm(base)
    for g in candidates:
        resid = target - g @ base
        if full:
            bound = plain_norm(g, exp)[0] + plain_norm(resid, exp)[0] * left_norm
        elif np.linalg.norm(resid) <= policy.rank_tol * max(base.shape) * scale:
            bound = plain_norm(g, exp)[0]
        else:
            continue
        best = min(best, bound)
    return best


def norm_upper(op: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[float, bool]:
    """Sound upper bound on ||op|| and whether it is the exact value."""
    _require_same_exponent(op)
    a = _ambient_matrix(op)
    if op.domain.basis is None:
        return plain_norm(a, op.exp)
    if op.exp.p == 2.0:
        # exact: the pseudo-inverse extension vanishes off the subspace
        _, r = np.linalg.qr(op.domain.basis)
        return float(np.linalg.norm(np.linalg.solve(r.T, a.T).T, 2)), True
    return factor_bound(a, op.domain.basis, op.exp, policy), False


def _ratio_terms(op: Operator) -> tuple[NormCombo, NormCombo]:
    amb = Space(_ambient_matrix(op).shape[0], op.exp)
    num = NormCombo([NormTerm(1.0, _ambient_matrix(op), amb)])
    den = NormCombo([NormTerm(1.0, None, op.domain)])
    return num, den


def op_norm_bounds(op: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> BoundInterval:
    """Interval containing the lp -> lp operator norm."""
    upper, exact = norm_upper(op, policy)
    if exact:
        return BoundInterval(upper, upper, True)
    num, den = _ratio_terms(op)
    best = ratio_search(num, den, op.domain, maximize=True, policy=policy)
    return BoundInterval(best.value, upper, False)


def numeric_rank(op: Operator | np.ndarray, policy: NumericPolicy = DEFAULT_POLICY) -> int:
    m = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=float)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int((s > rank_threshold(s, m.shape, policy)).sum()) if s[0] > 0 else 0


def _svd_rank(m: np.ndarray, policy: NumericPolicy):
    u, s, vt = np.linalg.svd(m)
    r = int((s > rank_threshold(s, m.shape, policy)).sum()) if s.size and s[0] > 0 else 0
    return u, s, vt, r


def kernel_basis(op: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> SubspaceBasis:
    _, _, vt, r = _svd_rank(op.matrix, policy)
    return SubspaceBasis(vt[r:].T, op.domain)


def range_basis(op: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> SubspaceBasis:
    u, _, _, r = _svd_rank(op.matrix, policy)
    return SubspaceBasis(u[:, :r], op.codomain)


def codim(basis: SubspaceBasis | np.ndarray, space: Space, policy: NumericPolicy = DEFAULT_POLICY) -> int:
    """``space.dim`` minus the numeric rank of the spanning vectors.

    Accepts a :class:`SubspaceBasis` or a raw array with one vector per row
    (raw vectors may be dependent).
    """
    if isinstance(basis, SubspaceBasis):
        m = basis.matrix
    else:
        arr = np.asarray(basis, dtype=float)
        m = np.zeros((space.dim, 0)) if arr.size == 0 else np.atleast_2d(arr).T
    if m.shape[0] != space.dim:
        raise ValueError("vectors do not live in the given space")
    return space.dim - numeric_rank(m, policy)


def gain_lower(op: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[float, bool]:
    """Sound lower bound on inf ||op x|| / ||x|| and whether it is exact."""
    _require_same_exponent(op)
    if numeric_rank(op, policy) < op.domain.dim:
        return 0.0, True
    a = _ambient_matrix(op)
    if op.exp.p == 2.0:
        if op.domain.basis is not None:
            _, r = np.linalg.qr(op.domain.basis)
            a = np.linalg.solve(r.T, a.T).T
        return float(np.linalg.svd(a, compute_uv=False)[-1]), True
    # ||x|| = ||B x|| <= c ||A x||  gives gain >= 1/c
    back = op.domain.basis if op.domain.basis is not None else np.eye(op.domain.dim)
    c = factor_bound(back, a, op.exp, policy)
    if not math.isfinite(c) or c == 0.0:
        return 0.0, False
    exact = op.domain.basis is None and a.shape[0] == a.shape[1] and op.exp.p in (1.0, math.inf)
    return 1.0 / c, exact


def min_gain_bounds(op: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> BoundInterval:
    """Interval containing inf_{x != 0} ||op x|| / ||x||."""
    lower, exact = gain_lower(op, policy)
    if exact:
        return BoundInterval(lower, lower, True)
    num, den = _ratio_terms(op)
    best = ratio_search(num, den, op.domain, maximize=False, policy=policy)
    return BoundInterval(lower, max(best.value, lower), False)


def restrict(op: Operator, subspace: SubspaceBasis) -> Operator:
    """``op`` restricted to ``span(subspace)``, in the coordinates of that basis.

    The new domain carries the ambient norm through the basis, so norms of
    the restriction are norms of ``op`` on the subspace.
    """
    if subspace.size == 0:
        raise ValueError("cannot restrict to the zero subspace")
    if not subspace.space.same_as(op.domain):
        raise ValueError("subspace does not live in the operator's domain")
    ambient = op.domain.embed(subspace.matrix)
    dom = Space(subspace.size, op.domain.exp, basis=ambient)
    return Operator(op.matrix @ subspace.matrix, dom, op.codomain)


def embedding(subspace: SubspaceBasis) -> Operator:
    """The inclusion of ``span(subspace)`` into its ambient space."""
    return restrict(Operator.identity(subspace.space), subspace)

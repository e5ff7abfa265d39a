"""Concrete operators with machine-checked claims.

Each constructor returns a :class:`GalleryInstance`: the operators it built
plus a list of claims, each carrying a measured value and a pass/fail flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import HildingCertificate, fit_lambda, fit_lambda_search, repair_bounded
from .continuation import verify_codim_preservation
from .lp_core import Exponent, ExponentLike, Space, SubspaceBasis, _sphere_columns, spans_equal
from .operators import (
    Operator,
    codim,
    embedding,
    min_gain_bounds,
    numeric_rank,
    op_norm_bounds,
    range_basis,
    restrict,
)
from .policy import DEFAULT_POLICY, NumericPolicy
from .spectral import antipodal_gap, fixed_point_gap, ray_scan, spectrum


@dataclass(frozen=True)
class Claim:
    description: str
    passed: bool
    measured: object
    expected: object = None


@dataclass
class GalleryInstance:
    name: str
    operators: dict = field(default_factory=dict)
    claims: list[Claim] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.claims)

    def claim(self, description: str, passed, measured, expected=None) -> None:
        self.claims.append(Claim(description, bool(passed), measured, expected))


def _rotation_matrix(m: int) -> np.ndarray:
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(m), block)


def _isometry_defect(T: Operator, count: int, seed: int) -> float:
    x = _sphere_columns(T.domain, count, seed)
    return float(np.abs(T.codomain.norm(T.matrix @ x) - T.domain.norm(x)).max())


def rotation_l1(policy: NumericPolicy = DEFAULT_POLICY) -> GalleryInstance:
    """``(a1, a2) -> (a2, -a1)`` on two-dimensional l1."""
    inst = GalleryInstance("rotation_l1")
    T = Operator.from_matrix(_rotation_matrix(1), 1)
    I = Operator.identity(T.domain)
    inst.operators["T"] = T
    fit = fit_lambda_search(I, T, policy)
    inst.claim("fitted lambda* = 1, so no certificate with lambda < 1 exists",
               abs(fit.value - 1.0) <= 1e-6, fit.value, 1.0)
    inst.claim("lambda* is attained at a canonical direction",
               bool(np.isclose(np.abs(fit.x).max(), 1.0)), fit.x.tolist())
    fx = fixed_point_gap(T, policy)
    inst.claim("fixed-point gap min ||x - Tx|| = 1", abs(fx.residual - 1.0) <= 1e-6, fx.residual, 1.0)
    ap = antipodal_gap(T, policy)
    inst.claim("antipodal gap min ||x + Tx|| = 1", abs(ap.residual - 1.0) <= 1e-6, ap.residual, 1.0)
    defect = _isometry_defect(T, policy.check_samples, policy.seed)
    inst.claim("isometry: | ||Tx|| - ||x|| | <= 1e-12 on samples", defect <= 1e-12, defect, 0.0)
    rank = numeric_rank(T, policy)
    inst.claim("onto: rank 2", rank == 2, rank, 2)
    return inst


def block_rotation(m: int, p: ExponentLike, policy: NumericPolicy = DEFAULT_POLICY) -> GalleryInstance:
    """``(a1, a2, a3, a4, ...) -> (a2, -a1, a4, -a3, ...)`` on lp of dimension 2m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    exp = Exponent.parse(p)
    inst = GalleryInstance(f"block_rotation(m={m}, p={exp})")
    T = Operator.from_matrix(_rotation_matrix(m), exp)
    inst.operators["T"] = T
    defect = _isometry_defect(T, policy.check_samples, policy.seed)
    inst.claim("isometry: | ||Tx|| - ||x|| | <= 1e-12 on samples", defect <= 1e-12, defect, 0.0)
    rank = numeric_rank(T, policy)
    inst.claim("onto: full rank", rank == 2 * m, rank, 2 * m)
    eye = Operator.identity(T.domain)
    for label, shifted in (("fixed-point", eye - T), ("antipodal", eye + T)):
        gains = min_gain_bounds(shifted, policy)
        inst.claim(f"{label} gap bounded away from 0 (sound lower bound)", gains.lower > 0, gains.lower)
        if exp.p == 2.0:
            inst.claim(f"{label} gap = sqrt(2)", abs(gains.lower - math.sqrt(2)) <= 1e-9, gains.lower, math.sqrt(2))
    if exp.p == 1.0 and m == 1:
        fx = fixed_point_gap(T, policy)
        inst.claim("fixed-point gap = 1 (as for rotation_l1)", abs(fx.residual - 1.0) <= 1e-6, fx.residual, 1.0)
    spec = spectrum(T, policy)
    n_plus = int(np.sum(np.abs(spec.eigenvalues - 1j) <= 1e-9))
    n_minus = int(np.sum(np.abs(spec.eigenvalues + 1j) <= 1e-9))
    inst.claim("spectrum = {i, -i}, each with multiplicity m",
               n_plus == m and n_minus == m, [str(v) for v in spec.eigenvalues], f"{{i, -i}} x {m}")
    grid = [a for a in np.linspace(-4.0, 4.0, 17) if a != 0.0]
    neg = ray_scan(T, "negative", [a for a in grid if a < 0], policy=policy)
    pos = ray_scan(T, "positive", [a for a in grid if a > 0], policy=policy)
    zero = min_gain_bounds(T, policy)
    all_inv = neg.all_invertible and pos.all_invertible and zero.lower > 0
    smallest = min([e.gain_lower for e in neg.entries + pos.entries] + [zero.lower])
    inst.claim("every real ray alpha*I - T invertible on the grid [-4, 4]", all_inv, smallest)
    return inst


def truncated_shift(n: int) -> GalleryInstance:
    """Lower shift on l2 of dimension n with the uniform near-fixed vector."""
    if n < 2:
        raise ValueError("n must be >= 2")
    inst = GalleryInstance(f"truncated_shift(n={n})")
    if n <= 200:
        inst.operators["S"] = Operator.from_matrix(np.eye(n, k=-1), 2)
    x = np.full(n, 1.0 / math.sqrt(n))
    sx = np.concatenate([[0.0], x[:-1]])
    residual = float(np.linalg.norm(sx - x))
    inst.claim("witness is a unit vector", abs(np.linalg.norm(x) - 1.0) <= 1e-12, float(np.linalg.norm(x)), 1.0)
    inst.claim("||S x_n - x_n|| = n^(-1/2)", abs(residual - n ** -0.5) <= 1e-12, residual, n ** -0.5)
    inst.claim("residual * sqrt(n) = 1", abs(residual * math.sqrt(n) - 1.0) <= 1e-12, residual * math.sqrt(n), 1.0)
    inst.notes.append(
        "asymptotic claim: the residuals n^(-1/2) -> 0 give an approximate fixed point "
        "sequence of the shift on infinite-dimensional l2; each truncation is a "
        "finite matrix with 1 not an eigenvalue"
    )
    return inst


def diagonal_growth(n: int, p: ExponentLike, policy: NumericPolicy = DEFAULT_POLICY) -> GalleryInstance:
    """``diag(1, ..., n)``: satisfies the weak inequality ``||(I - T)x|| <= ||Tx||``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    exp = Exponent.parse(p)
    inst = GalleryInstance(f"diagonal_growth(n={n}, p={exp})")
    T = Operator.from_matrix(np.diag(np.arange(1.0, n + 1)), exp)
    I = Operator.identity(T.domain)
    inst.operators["T"] = T
    x = _sphere_columns(T.domain, policy.check_samples, policy.seed)
    lhs = T.codomain.norm(x - T.matrix @ x)
    rhs = T.codomain.norm(T.matrix @ x)
    violations = int(np.sum(lhs > rhs * (1 + 1e-12)))
    inst.claim("||(I - T)x|| <= ||Tx|| on samples", violations == 0, violations, 0)
    lam = fit_lambda(I, T, policy)
    closed = (n - 1) / (n + 1)
    inst.claim("fitted symmetric lambda* >= (n-1)/(n+1) (value at e_n)", lam >= closed - 1e-12, lam, closed)
    norm = op_norm_bounds(T, policy).upper
    delta = repair_bounded(0.0, norm)
    inst.claim("repair delta = n/(n+1) with ||T|| = n", abs(delta - n / (n + 1)) <= 1e-12, delta, n / (n + 1))
    if n > 1:
        sym_lhs = lhs
        sym_rhs = delta * (T.domain.norm(x) + rhs)
        bad = int(np.sum(sym_lhs > sym_rhs * (1 + 1e-12)))
        inst.claim("repaired symmetric inequality holds on samples", bad == 0, bad, 0)
    inst.notes.append("lambda* and delta tend to 1 as n grows: the weak inequality carries no uniform bound")
    return inst


def example10(m: int, p: ExponentLike, K: float = 2.0, policy: NumericPolicy = DEFAULT_POLICY) -> GalleryInstance:
    """Finite model of an isomorphism onto a complemented subspace.

    ``X = lp^m (+) lp^m`` with the p-sum norm (so X is lp^(2m)),
    ``Y = span{(e_i, 0)}``, ``Z = span{(e_i, e_i / K)}`` and
    ``T(sum a_i e_i, 0) = (sum a_i e_i, sum a_i e_i / K)``.
    """
    exp = Exponent.parse(p)
    if m < 1:
        raise ValueError("m must be >= 1")
    ratio = 1.0 / K if K > 0 else math.inf
    if not ratio <= 0.5:
        raise ValueError(f"K = {K!r} violates (1/K)||a|| <= 1/2 ||a||: measured ratio {ratio!r} > 0.5")
    inst = GalleryInstance(f"example10(m={m}, p={exp}, K={K!r})")
    X = Space(2 * m, exp)
    eye = np.eye(m)
    zero = np.zeros((m, m))
    Y = SubspaceBasis(np.vstack([eye, zero]), X)
    Z = SubspaceBasis(np.vstack([eye, eye / K]), X)
    # extension acting as the identity on the second factor
    T_full = Operator(np.block([[eye, zero], [eye / K, eye]]), X, X)
    TY = restrict(T_full, Y)
    P = Operator(np.block([[zero, K * eye], [zero, eye]]), X, X)
    inst.operators.update({"T": T_full, "T|Y": TY, "P": P})

    defect = op_norm_bounds(embedding(Y) - TY, policy)
    inst.claim("||(I - T)|Y|| = 1/K <= 1/2 < 1", defect.upper <= 0.5 + 1e-12 and defect.upper < 1.0,
               defect.upper, ratio)
    inst.claim("||(I - T)|Y|| equals 1/K", abs(defect.upper - ratio) <= 1e-12 and abs(defect.lower - ratio) <= 1e-12,
               [defect.lower, defect.upper], ratio)
    idem = float(np.abs(P.matrix @ P.matrix - P.matrix).max())
    inst.claim("P o P = P entrywise", idem <= 1e-12, idem, 0.0)
    same, dist = spans_equal(range_basis(P, policy), Z)
    inst.claim("range(P) = Z", same, dist, 0.0)
    rank = numeric_rank(TY, policy)
    onto, dist_t = spans_equal(range_basis(TY, policy), Z)
    gain = min_gain_bounds(TY, policy)
    inst.claim("T is an isomorphism of Y onto Z", rank == m and onto and gain.lower > 0,
               {"rank": rank, "range_distance": dist_t, "gain_lower": gain.lower})
    cy, cz = codim(Y, X, policy), codim(Z, X, policy)
    inst.claim("codim_X Y = codim_X Z = m", cy == cz == m, [cy, cz], m)
    lam1 = min(0.99, defect.upper * (1 + 1e-6) + 1e-12)
    trace = verify_codim_preservation(Y, T_full, HildingCertificate(lam1, 0.0), policy, raise_on_failure=False)
    inst.claim("continuation verifier: codim_X Y = codim_X T(Y)",
               trace.preserved and trace.codim_start == trace.codim_end == m,
               [trace.codim_start, trace.codim_end], m)
    inst.notes.append("direct-sum norm on X: p-sum of the two block norms")
    inst.notes.append("the uncomplemented subspace W has no finite-dimensional analogue; f_i = e_i is used")
    inst.notes.append("extension distortion ||T_n|| ||T_n^-1|| >= n is out of scope (infimum over all extensions)")
    return inst


GALLERY = {
    "rotation_l1": rotation_l1,
    "block_rotation": block_rotation,
    "truncated_shift": truncated_shift,
    "diagonal_growth": diagonal_growth,
    "example10": example10,
}

"""Codimension preservation along the homotopy ``T_a = (1 - a) I + a T``.

``verify_codim_preservation`` walks ``a`` from 0 to 1 in steps no longer
than ``epsilon_step(lam, ||T||)`` and at every step re-checks the pieces of
the continuation argument numerically:

* the gain floor ``||T_a x|| >= (1 - lam)/(1 + lam) ||x||`` on sampled points;
* the step bound ``||T_a x - T_b x|| <= |a - b| (1 + ||T||) ||x||``;
* that ``L: T_a x -> T_b x`` satisfies ``||I - L|| < 1/2`` and hence
  ``||I - L^-1|| < 1``, so the codimension cannot drop in either direction;
* the rank and codimension of ``T_a(Y)``.

In finite dimensions a single rank computation would settle the question;
the walk exists to execute each step of the argument and to report exactly
where a numerical breach happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import (
    HildingCertificate,
    PreconditionError,
    Status,
    fit_lambda,
    verify_certificate,
)
from .lp_core import Space, SubspaceBasis, _sphere_columns, spans_equal, subspace_distance
from .operators import (
    Operator,
    codim,
    embedding,
    gain_lower,
    kernel_basis,
    norm_upper,
    numeric_rank,
    op_norm_bounds,
    range_basis,
    restrict,
)
from .policy import DEFAULT_POLICY, NumericPolicy

MAX_STEPS = 100_000


class ContinuationFailure(RuntimeError):
    """A check along the path failed; ``trace`` holds the step-by-step record."""

    def __init__(self, message: str, trace: "ContinuationTrace | None" = None):
        super().__init__(message)
        self.trace = trace


def epsilon_step(lam: float, norm_t_upper: float) -> float:
    """Admissible step ``1/2 * (1 - lam)/(1 + lam) * 1/(1 + ||T||)``."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("lam must lie in [0, 1)")
    if not norm_t_upper >= 0:
        raise ValueError("norm bound must be nonnegative")
    return 0.5 * ((1.0 - lam) / (1.0 + lam)) * (1.0 / (1.0 + norm_t_upper))


@dataclass(frozen=True)
class ContinuationStep:
    alpha: float
    rank: int
    codim: int
    # |alpha - previous alpha| * (1 + ||T||); zero for the first record
    step_gap_bound: float
    sampled_min_gain: float
    gain_ok: bool
    forward_bound: float = 0.0  # bound on ||I - L|| from the previous point
    backward_bound: float = 0.0  # bound on ||I - L^-1||
    lemma_ok: bool = True

    @property
    def ok(self) -> bool:
        return self.gain_ok and self.lemma_ok


@dataclass
class ContinuationTrace:
    lam: float
    gain_floor: float
    epsilon: float
    norm_t_upper: float
    ambient_dim: int
    subspace_dim: int
    constant_path: bool = False
    steps: list[ContinuationStep] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def codim_start(self) -> int:
        return self.steps[0].codim

    @property
    def codim_end(self) -> int:
        return self.steps[-1].codim

    @property
    def preserved(self) -> bool:
        return not self.failures and len({s.rank for s in self.steps}) == 1


def _path_operator(B: np.ndarray, TB: np.ndarray, alpha: float, dom: Space, X: Space) -> Operator:
    return Operator((1.0 - alpha) * B + alpha * TB, dom, X)


def _lemma_bound(
    delta: float, diff: np.ndarray, d_norm: float, at: Operator, floor: float, policy: NumericPolicy
) -> float:
    """Upper bound on ``||(T_a - T_b) x|| / ||T_a x||``.

    The cheap bound uses the certified gain floor; the extension bound on
    ``T_a(Y)`` is only computed when the cheap one is not below 1/2.
    """
    cheap = delta * d_norm / floor
    if cheap < 0.5:
        return cheap
    g, _ = gain_lower(at, policy)
    best = min(cheap, delta * d_norm / g) if g > 0 else cheap
    try:
        image = Space(at.domain.dim, at.exp, basis=at.matrix)
        ext, _ = norm_upper(Operator(delta * diff, image, at.codomain), policy)
        best = min(best, ext)
    except ValueError:
        pass
    return best


def verify_codim_preservation(
    Y: SubspaceBasis,
    T: Operator,
    c: HildingCertificate,
    policy: NumericPolicy = DEFAULT_POLICY,
    gain_tol: float = 1e-9,
    raise_on_failure: bool = True,
) -> ContinuationTrace:
    """Certify ``codim_X Y == codim_X T(Y)`` by walking the homotopy."""
    if not T.is_square or T.domain.embedded:
        raise ValueError("T must act on a full coordinate space")
    if not Y.space.same_as(T.domain):
        raise ValueError("Y must live in T's domain")
    X = T.domain
    S = embedding(Y)
    TY = restrict(T, Y)
    verdict = verify_certificate(S, TY, c, policy)
    if verdict.status is not Status.VERIFIED:
        raise PreconditionError(f"certificate on the restriction is {verdict.status.value}; refusing")

    lam = c.lam
    floor = (1.0 - lam) / (1.0 + lam)
    norm_t = op_norm_bounds(TY, policy).upper
    eps = epsilon_step(lam, norm_t)
    B, TB = S.matrix, TY.matrix
    diff = TB - B
    d_norm, _ = norm_upper(TY - S, policy)
    trace = ContinuationTrace(lam, floor, eps, norm_t, X.dim, Y.size)

    if d_norm == 0.0:
        trace.constant_path = True
        alphas = np.array([0.0, 1.0])
    else:
        n_steps = math.ceil(1.0 / eps)
        if n_steps > MAX_STEPS:
            raise PreconditionError(f"path needs {n_steps} steps (epsilon = {eps:.3e})")
        alphas = np.arange(n_steps + 1) / n_steps

    pts = _sphere_columns(S.domain, policy.step_samples + 2 * Y.size, policy.seed)
    prev: Operator | None = None
    for i, alpha in enumerate(alphas):
        at = _path_operator(B, TB, float(alpha), S.domain, X)
        rank = numeric_rank(at, policy)
        sampled = float((X.norm(at.matrix @ pts) / S.domain.norm(pts)).min())
        gain_ok = sampled >= floor - gain_tol
        gap = fwd = bwd = 0.0
        lemma_ok = True
        if prev is not None:
            delta = float(alpha - alphas[i - 1])
            gap = delta * (1.0 + norm_t)
            if delta * d_norm > gap * (1 + 1e-12):
                trace.failures.append(f"step {i}: perturbation exceeds |da|(1+||T||)")
                lemma_ok = False
            if not trace.constant_path:
                fwd = _lemma_bound(delta, diff, d_norm, prev, floor, policy)
                bwd = _lemma_bound(delta, diff, d_norm, at, floor, policy)
                lemma_ok = lemma_ok and fwd < 0.5 and bwd < 1.0
                if not lemma_ok:
                    trace.failures.append(f"step {i}: ||I-L|| bound {fwd:.3e}, ||I-L^-1|| bound {bwd:.3e}")
            if rank != trace.steps[-1].rank:
                trace.failures.append(f"step {i}: rank {trace.steps[-1].rank} -> {rank} at alpha={alpha:.6g}")
        if not gain_ok:
            trace.failures.append(f"step {i}: sampled gain {sampled:.3e} below floor {floor:.3e}")
        trace.steps.append(
            ContinuationStep(float(alpha), rank, X.dim - rank, gap, sampled, gain_ok, fwd, bwd, lemma_ok)
        )
        prev = at

    if trace.failures and raise_on_failure:
        raise ContinuationFailure("; ".join(trace.failures[:5]), trace)
    return trace


def codim_pair(S: Operator, T: Operator, lam: float, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[int, int]:
    """Codimensions of the ranges of S and T, which a symmetric bound forces equal."""
    if not 0.0 <= lam < 1.0:
        raise PreconditionError("lambda must lie in [0, 1)")
    fitted = fit_lambda(S, T, policy)
    if fitted > lam:
        raise PreconditionError(f"refuted: searched ratio {fitted!r} exceeds lambda {lam!r}")
    cs = codim(range_basis(S, policy), S.codomain, policy)
    ct = codim(range_basis(T, policy), T.codomain, policy)
    if cs != ct:
        raise ContinuationFailure(f"range codimensions differ: {cs} vs {ct}")
    return cs, ct


@dataclass(frozen=True)
class FredholmReport:
    kernel_dim_S: int
    kernel_dim_T: int
    cokernel_dim_S: int
    cokernel_dim_T: int
    index_S: int
    index_T: int
    kernels_equal: bool
    kernel_distance: float
    rank_nullity_index: int

    @property
    def ok(self) -> bool:
        return (
            self.kernels_equal
            and self.index_S == self.index_T
            and self.index_S == self.rank_nullity_index
        )


def fredholm_check(
    S: Operator,
    T: Operator,
    c: HildingCertificate,
    policy: NumericPolicy = DEFAULT_POLICY,
    kernel_tol: float = 1e-8,
) -> FredholmReport:
    """Kernel dimension, cokernel dimension and index for a certified pair."""
    verdict = verify_certificate(S, T, c, policy)
    if verdict.status is not Status.VERIFIED:
        raise PreconditionError(f"certificate is {verdict.status.value}, not Verified; refusing")
    ks, kt = kernel_basis(S, policy), kernel_basis(T, policy)
    equal, dist = spans_equal(ks, kt, kernel_tol)
    bs = codim(range_basis(S, policy), S.codomain, policy)
    bt = codim(range_basis(T, policy), T.codomain, policy)
    return FredholmReport(
        kernel_dim_S=ks.size,
        kernel_dim_T=kt.size,
        cokernel_dim_S=bs,
        cokernel_dim_T=bt,
        index_S=ks.size - bs,
        index_T=kt.size - bt,
        kernels_equal=equal,
        kernel_distance=dist,
        rank_nullity_index=S.domain.dim - S.codomain.dim,
    )


def krylov_basis(T: Operator, start: np.ndarray, count: int, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthonormal basis of ``span{start, T start, ..., T^(count-1) start}``.

    Arnoldi with one reorthogonalization pass; stops early when the space
    becomes invariant.
    """
    n = T.domain.dim
    v = np.asarray(start, dtype=float)
    q = np.zeros((n, 0))
    scale = max(np.linalg.norm(T.matrix, 2), 1.0)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return q
    q = (v / nv)[:, None]
    while q.shape[1] < min(count, n):
        w = T.matrix @ q[:, -1]
        for _ in range(2):
            w = w - q @ (q.T @ w)
        nw = np.linalg.norm(w)
        if nw <= policy.rank_tol * n * scale:
            break
        q = np.hstack([q, (w / nw)[:, None]])
    return q


def krylov_membership(
    T: Operator,
    c: HildingCertificate,
    x,
    n: int,
    K: int,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> float:
    """Euclidean distance from x to ``span{T^k x : n <= k <= K}``."""
    if K < n or n < 0:
        raise ValueError("need 0 <= n <= K")
    if not T.is_square:
        raise ValueError("krylov_membership needs a square operator")
    sym = HildingCertificate(c.lam, c.lam)
    verdict = verify_certificate(Operator.identity(T.domain), T, sym, policy)
    if verdict.status is not Status.VERIFIED:
        raise PreconditionError(f"certificate is {verdict.status.value}, not Verified; refusing")
    x = np.asarray(x, dtype=float).ravel()
    start = x.copy()
    for _ in range(n):
        start = T.matrix @ start
    q = krylov_basis(T, start, K - n + 1, policy)
    if q.shape[1] == 0:
        return float(np.linalg.norm(x))
    return subspace_distance(x, SubspaceBasis(q, T.domain))

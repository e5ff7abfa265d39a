"""Multi-start projected-gradient search over the unit sphere of an lp space.

Every objective here is a ratio of two nonnegative combinations of norms,
``sum_i a_i ||M_i x|| / sum_j b_j ||N_j x||``, which is invariant under
scaling of ``x``.  Each start takes a Euclidean gradient step and is then
renormalized onto the sphere; the step doubles after an improvement and is
halved otherwise.  All starts run together as columns of one array.

Results are deterministic for a given seed: the best value wins and ties go
to the lowest start index.  The value returned is attained at the returned
vector, so a maximum is a valid lower bound on the supremum and a minimum a
valid upper bound on the infimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp_core import Space, _sphere_columns, canonical_directions, sign_vertices
from .policy import DEFAULT_POLICY, NumericPolicy


@dataclass(frozen=True)
class NormTerm:
    coef: float
    matrix: np.ndarray | None  # None means the identity (norm of x itself)
    space: Space


class NormCombo:
    def __init__(self, terms: list[NormTerm]):
        self.terms = [t for t in terms if t.coef != 0.0]

    def value(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[1])
        for t in self.terms:
            y = x if t.matrix is None else t.matrix @ x
            out += t.coef * t.space.norm(y)
        return out

    def grad(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        for t in self.terms:
            if t.matrix is None:
                out += t.coef * t.space.norm_grad(x)
            else:
                out += t.coef * (t.matrix.T @ t.space.norm_grad(t.matrix @ x))
        return out


@dataclass(frozen=True)
class SearchResult:
    value: float
    x: np.ndarray
    start_index: int
    iterations: int


def _ratio(num: NormCombo, den: NormCombo, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = num.value(x)
    d = den.value(x)
    safe = np.where(d > 0, d, 1.0)
    return np.where(d > 0, n / safe, 0.0), n, d


def search_starts(space: Space, policy: NumericPolicy, extra: np.ndarray | None = None) -> np.ndarray:
    parts = [canonical_directions(space), sign_vertices(space)]
    if extra is not None and extra.size:
        e = np.asarray(extra, dtype=float).reshape(space.dim, -1)
        nrm = space.norm(e)
        keep = nrm > 0
        parts.append(e[:, keep] / nrm[keep])
    parts.append(_sphere_columns(space, policy.search_starts, policy.seed + 7919))
    return np.hstack(parts)


def evaluate_ratio(num: NormCombo, den: NormCombo, x: np.ndarray) -> np.ndarray:
    return _ratio(num, den, x)[0]


def ratio_search(
    num: NormCombo,
    den: NormCombo,
    space: Space,
    maximize: bool = True,
    policy: NumericPolicy = DEFAULT_POLICY,
    extra_starts: np.ndarray | None = None,
) -> SearchResult:
    """Optimize ``num(x) / den(x)`` over the sphere of ``space``."""
    x = search_starts(space, policy, extra_starts)
    sign = 1.0 if maximize else -1.0
    f, _, _ = _ratio(num, den, x)
    step = np.full(x.shape[1], 0.25)
    active = np.ones(x.shape[1], dtype=bool)
    it = 0
    while it < policy.search_max_iter and active.any():
        it += 1
        idx = np.flatnonzero(active)
        xa = x[:, idx]
        _, n, d = _ratio(num, den, xa)
        safe = np.where(d > 0, d, 1.0)
        g = (num.grad(xa) * d - n * den.grad(xa)) / (safe * safe)
        g *= sign
        gn = np.linalg.norm(g, axis=0)
        xn = np.linalg.norm(xa, axis=0)
        flat = gn <= 1e-300
        direction = g / np.where(flat, 1.0, gn)
        trial = xa + step[idx] * xn * direction
        tn = space.norm(trial)
        bad = tn <= 0
        trial = trial / np.where(bad, 1.0, tn)
        ft, _, _ = _ratio(num, den, trial)
        gain = sign * (ft - f[idx])
        better = (gain > 0) & ~bad & ~flat
        acc = idx[better]
        rel = gain[better] / np.maximum(np.abs(f[acc]), 1e-300)
        x[:, acc] = trial[:, better]
        f[acc] = ft[better]
        step[acc] = np.minimum(step[acc] * 2.0, 1.0)
        rej = idx[~better]
        step[rej] *= 0.5
        done = np.zeros(x.shape[1], dtype=bool)
        done[acc[rel < policy.search_rel_tol]] = True
        done[rej[step[rej] < 1e-15]] = True
        done[idx[flat]] = True
        active &= ~done
    best = int(np.argmax(sign * f))
    return SearchResult(float(f[best]), x[:, best].copy(), best, it)

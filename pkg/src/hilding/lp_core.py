"""Finite-dimensional lp coordinate spaces.

Vectors are plain numpy arrays; a :class:`Space` says which norm they carry.
Batches of vectors are stored as the *columns* of a 2-D array so that an
operator acts on a whole batch with one matrix product.

A space may also be a subspace in disguise: when ``basis`` is set, a
coordinate vector ``c`` stands for the ambient vector ``basis @ c`` and its
norm is the ambient lp norm of that vector.  This is how restrictions
``T|_Y`` keep measuring things in the norm of the surrounding space.

Subspace *distances* are always Euclidean, whatever the exponent.  They are
only used to decide membership in a span, which does not depend on the norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .policy import DEFAULT_POLICY, NumericPolicy


class DegenerateBasisError(ValueError):
    """A basis is numerically rank deficient."""


@dataclass(frozen=True)
class Exponent:
    """An exponent ``p`` in ``[1, inf]``; ``inf`` is stored as ``math.inf``."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise ValueError(f"exponent must lie in [1, inf], got {self.p!r}")
        object.__setattr__(self, "p", p)

    @classmethod
    def parse(cls, value: "ExponentLike") -> "Exponent":
        if isinstance(value, Exponent):
            return value
        if isinstance(value, str):
            if value.strip() == "inf":
                return cls(math.inf)
            p = float(value)
            # "inf" is the only accepted spelling of infinity in text
            if not math.isfinite(p):
                raise ValueError(f"exponent {value!r}: spell infinity as 'inf'")
            return cls(p)
        return cls(float(value))

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    @property
    def conjugate(self) -> "Exponent":
        if self.is_inf:
            return Exponent(1.0)
        if self.p == 1.0:
            return Exponent(math.inf)
        return Exponent(self.p / (self.p - 1.0))

    def __str__(self) -> str:
        if self.is_inf:
            return "inf"
        return repr(self.p) if not self.p.is_integer() else str(int(self.p))


ExponentLike = Union[Exponent, float, int, str]


def lp_norm(x: np.ndarray, exp: ExponentLike, axis: int = 0) -> np.ndarray:
    """lp norm along ``axis`` (columns by default)."""
    exp = Exponent.parse(exp)
    a = np.abs(np.asarray(x, dtype=float))
    if a.size == 0:
        return np.zeros(a.shape[1 - axis] if a.ndim == 2 else ())
    if exp.is_inf:
        return a.max(axis=axis)
    if exp.p == 1.0:
        return a.sum(axis=axis)
    # scale first so large/small entries do not overflow or underflow in |x|^p
    scale = a.max(axis=axis, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    b = a / safe
    if exp.p == 2.0:
        r = np.sqrt((b * b).sum(axis=axis))
    else:
        r = (b ** exp.p).sum(axis=axis) ** (1.0 / exp.p)
    return r * np.squeeze(safe, axis=axis)


def lp_norm_grad(y: np.ndarray, exp: ExponentLike) -> np.ndarray:
    """A (sub)gradient of the lp norm for every column of ``y``."""
    exp = Exponent.parse(exp)
    y = np.asarray(y, dtype=float)
    if exp.p == 1.0:
        return np.sign(y)
    if exp.is_inf:
        g = np.zeros_like(y)
        idx = np.argmax(np.abs(y), axis=0)
        cols = np.arange(y.shape[1])
        g[idx, cols] = np.sign(y[idx, cols])
        return g
    n = lp_norm(y, exp)
    safe = np.where(n > 0, n, 1.0)
    if exp.p == 2.0:
        return y / safe
    return np.sign(y) * (np.abs(y) / safe) ** (exp.p - 1.0)


@dataclass(frozen=True, eq=False)
class Space:
    """An lp coordinate space, optionally carried on a subspace basis.

    ``basis`` (ambient_dim x dim) makes the norm of ``c`` equal to
    ``||basis @ c||_p``.  The basis columns must be linearly independent.
    """

    dim: int
    exp: Exponent
    basis: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("space dimension must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "exp", Exponent.parse(self.exp))
        if self.basis is not None:
            b = np.array(self.basis, dtype=float)
            if b.ndim != 2 or b.shape[1] != self.dim:
                raise ValueError("basis must have one column per coordinate")
            b.setflags(write=False)
            object.__setattr__(self, "basis", b)

    @classmethod
    def lp(cls, dim: int, p: ExponentLike) -> "Space":
        return cls(dim, Exponent.parse(p))

    @property
    def ambient_dim(self) -> int:
        return self.dim if self.basis is None else self.basis.shape[0]

    @property
    def embedded(self) -> bool:
        return self.basis is not None

    def embed(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x if self.basis is None else self.basis @ x

    def norm(self, x: np.ndarray) -> np.ndarray:
        """Norm of a vector, or of every column of a 2-D batch."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(lp_norm(self.embed(x)[:, None], self.exp)[0])
        return lp_norm(self.embed(x), self.exp)

    def norm_grad(self, x: np.ndarray) -> np.ndarray:
        y = self.embed(x)
        g = lp_norm_grad(y, self.exp)
        return g if self.basis is None else self.basis.T @ g

    def same_as(self, other: "Space") -> bool:
        if self.dim != other.dim or self.exp != other.exp:
            return False
        if self.basis is None or other.basis is None:
            return self.basis is None and other.basis is None
        return self.basis.shape == other.basis.shape and np.array_equal(self.basis, other.basis)

    def describe(self) -> str:
        kind = f"l{self.exp}^{self.dim}"
        if self.basis is not None:
            kind += f" (subspace of l{self.exp}^{self.ambient_dim})"
        return kind


def vec_norm(x, space: Space | ExponentLike = 2) -> float:
    """lp norm of a single vector; zero exactly for the zero vector."""
    x = np.asarray(x, dtype=float).ravel()
    if isinstance(space, Space):
        return space.norm(x)
    return float(lp_norm(x[:, None], space)[0])


def canonical_directions(space: Space) -> np.ndarray:
    """Columns ``+e_1, -e_1, ..., +e_n, -e_n`` normalized in ``space``."""
    n = space.dim
    e = np.zeros((n, 2 * n))
    e[np.arange(n), 2 * np.arange(n)] = 1.0
    e[np.arange(n), 2 * np.arange(n) + 1] = -1.0
    return e / space.norm(e)


def sign_vertices(space: Space, limit: int = 256) -> np.ndarray:
    """Normalized sign vectors (vertices of the cube), one per +/- pair.

    All of them when ``2**(n-1) <= limit``, otherwise none; they are the
    extreme points of the l-infinity ball and useful search starts in l1 too.
    """
    n = space.dim
    if n < 2 or 2 ** (n - 1) > limit:
        return np.zeros((n, 0))
    codes = np.arange(2 ** (n - 1))
    bits = (codes[None, :] >> np.arange(n - 1)[:, None]) & 1
    v = np.vstack([np.ones((1, codes.size)), 1.0 - 2.0 * bits])
    return v / space.norm(v)


def _sphere_columns(space: Space, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    parts = []
    if count >= 2 * space.dim:
        parts.append(canonical_directions(space))
    rest = count - sum(p.shape[1] for p in parts)
    if rest > 0:
        g = rng.standard_normal((space.dim, rest))
        nrm = space.norm(g)
        # a Gaussian draw is zero with probability 0; guard anyway
        g[:, nrm == 0] = 1.0
        parts.append(g / space.norm(g))
    return np.hstack(parts)


def sphere_sample(space: Space, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit-sphere sample, one vector per row.

    When ``count >= 2 * dim`` the first ``2 * dim`` rows are the signed
    canonical directions.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    return _sphere_columns(space, count, seed).T.copy()


def rank_threshold(sigma: np.ndarray, shape: tuple[int, int], policy: NumericPolicy = DEFAULT_POLICY) -> float:
    if sigma.size == 0:
        return 0.0
    return policy.rank_tol * max(shape) * float(sigma[0])


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Spanning vectors of a subspace, stored as the columns of ``matrix``.

    Independence is enforced (up to the rank tolerance); orthonormality is
    not assumed.  An empty basis stands for the zero subspace.
    """

    matrix: np.ndarray
    space: Space

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim == 1:
            m = m[:, None]
        if m.size == 0:
            m = np.zeros((self.space.dim, 0))
        if m.shape[0] != self.space.dim:
            raise ValueError(f"basis vectors have length {m.shape[0]}, space has dimension {self.space.dim}")
        if m.shape[1] > 0:
            s = np.linalg.svd(m, compute_uv=False)
            if s[0] == 0 or s[-1] <= DEFAULT_POLICY.rank_tol * s[0] * self.space.dim or m.shape[1] > m.shape[0]:
                raise DegenerateBasisError(
                    f"basis of {m.shape[1]} vectors is numerically rank deficient "
                    f"(sigma_min/sigma_max = {s[-1] / s[0] if s[0] else 0.0:.3e})"
                )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vectors(cls, vectors, space: Space) -> "SubspaceBasis":
        """Build from a sequence of vectors (one per row)."""
        arr = np.array(vectors, dtype=float)
        if arr.size == 0:
            return cls(np.zeros((space.dim, 0)), space)
        return cls(np.atleast_2d(arr).T, space)

    @property
    def size(self) -> int:
        return self.matrix.shape[1]

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self.matrix[:, j] for j in range(self.size)]

    def orthonormal(self) -> np.ndarray:
        q, _ = np.linalg.qr(self.matrix)
        return q


def subspace_distance(x, basis: SubspaceBasis) -> float:
    """Euclidean distance from ``x`` to ``span(basis)`` by least squares."""
    if basis.size == 0:
        raise ValueError("subspace_distance needs a nonempty basis")
    x = np.asarray(x, dtype=float).ravel()
    coef, *_ = np.linalg.lstsq(basis.matrix, x, rcond=None)
    return float(np.linalg.norm(x - basis.matrix @ coef))


def spans_equal(a: SubspaceBasis, b: SubspaceBasis, tol: float = 1e-8) -> tuple[bool, float]:
    """Mutual membership test; returns (equal, worst relative distance)."""
    if a.size != b.size:
        return False, math.inf
    if a.size == 0:
        return True, 0.0
    worst = 0.0
    for src, dst in ((a, b), (b, a)):
        for v in src.vectors:
            worst = max(worst, subspace_distance(v, dst) / max(np.linalg.norm(v), 1e-300))
    return worst <= tol, worst

"""Spectra, approximate point spectrum witnesses and real-ray scans.

In finite dimensions the spectrum and the approximate point spectrum are
both the set of eigenvalues, so statements about rays ``alpha*I - T`` reduce
to eigenvalue and smallest-gain computations.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .certificates import HildingCertificate, ray_gain
from .operators import Operator, min_gain_bounds, numeric_rank
from .policy import DEFAULT_POLICY, NumericPolicy
from .search import NormCombo, NormTerm, ratio_search


class SpectrumError(RuntimeError):
    """QR iteration failed to converge within the iteration cap."""


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form by Householder reflections (complex)."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        h[k + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1 :, :])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v.conj())
        h[k + 2 :, k] = 0.0
    return h


def _eig2(a, b, c, d) -> tuple[complex, complex]:
    """Eigenvalues of [[a, b], [c, d]], computed without cancellation."""
    tr = a + d
    half = 0.5 * (a - d)
    disc = cmath.sqrt(half * half + b * c)
    mid = 0.5 * tr
    r1 = mid + disc if abs(mid + disc) >= abs(mid - disc) else mid - disc
    det = a * d - b * c
    r2 = det / r1 if r1 != 0 else mid - (r1 - mid)
    return r1, r2


def _qr_step(h: np.ndarray, mu: complex) -> None:
    """One explicitly shifted QR step on the square block ``h`` (in place)."""
    m = h.shape[0]
    h -= mu * np.eye(m)
    rots = []
    for k in range(m - 1):
        a, b = h[k, k], h[k + 1, k]
        r = np.hypot(abs(a), abs(b))
        c, s = (1.0 + 0j, 0j) if r == 0 else (a / r, b / r)
        g = np.array([[c.conjugate(), s.conjugate()], [-s, c]])
        h[k : k + 2, k:] = g @ h[k : k + 2, k:]
        rots.append(g)
    for k, g in enumerate(rots):
        hi = min(k + 3, m)
        h[:hi, k : k + 2] = h[:hi, k : k + 2] @ g.conj().T
    h += mu * np.eye(m)


def eigenvalues(a: np.ndarray, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """All eigenvalues via Hessenberg reduction and Wilkinson-shifted QR."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("eigenvalues need a square matrix")
    h = hessenberg(a)
    scale_all = np.linalg.norm(h) or 1.0
    out: list[complex] = []
    hi = n - 1
    total = 0
    since = 0
    cap = policy.qr_iter_factor * max(n, 1)
    while hi >= 0:
        # find the start of the unreduced trailing block
        lo = hi
        while lo > 0:
            scale = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if scale == 0.0:
                scale = scale_all
            if abs(h[lo, lo - 1]) < policy.qr_deflation * scale:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        size = hi - lo + 1
        if size == 1:
            out.append(complex(h[hi, hi]))
            hi -= 1
            since = 0
            continue
        if size == 2:
            out.extend(_eig2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi]))
            hi -= 2
            since = 0
            continue
        total += 1
        since += 1
        if total > cap:
            raise SpectrumError(f"QR iteration did not converge in {cap} iterations")
        w = h[lo : hi + 1, lo : hi + 1]
        if since % 10 == 0:
            # exceptional shift to break cycles (e.g. permutation matrices)
            mu = w[-1, -1] + 0.75 * abs(w[-1, -2]) * cmath.exp(0.5j * since)
        else:
            r1, r2 = _eig2(w[-2, -2], w[-2, -1], w[-1, -2], w[-1, -1])
            mu = r1 if abs(r1 - w[-1, -1]) <= abs(r2 - w[-1, -1]) else r2
        _qr_step(w, mu)
        h[lo : hi + 1, lo : hi + 1] = w
    vals = np.array(out, dtype=complex)
    # exact real input has a conjugate-symmetric spectrum; clean tiny imaginary noise
    tiny = np.abs(vals.imag) <= 1e-14 * max(scale_all, 1.0)
    vals[tiny] = vals[tiny].real
    order = np.lexsort((vals.imag, np.round(vals.real, 12)))
    return vals[order]


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    residuals: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0


def spectrum(T: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> SpectrumReport:
    """Eigenvalues of T with the smallest singular value of ``T - lambda I`` as residual."""
    if not T.is_square:
        raise ValueError("spectrum needs a square operator")
    if T.domain.dim > 64:
        raise ValueError("spectrum supports dimensions up to 64")
    vals = eigenvalues(T.matrix, policy)
    eye = np.eye(T.domain.dim)
    res = np.array([np.linalg.svd(T.matrix - v * eye, compute_uv=False)[-1] for v in vals])
    return SpectrumReport(vals, res)


@dataclass(frozen=True, eq=False)
class ApproxWitness:
    lam: complex
    x: np.ndarray
    residual: float
    # True when residual is the exact infimum (p = 2); otherwise an upper bound
    exact: bool = True


def aps_residual(T: Operator, lam: float, policy: NumericPolicy = DEFAULT_POLICY) -> ApproxWitness:
    """Unit vector minimizing ``||(T - lam I) x||`` in T's exponent.

    Exact via the smallest singular vector for p = 2; otherwise the best
    point of a sphere search, so the residual is an upper bound.
    """
    if not T.is_square:
        raise ValueError("aps_residual needs a square operator")
    a = T.matrix - lam * np.eye(T.domain.dim)
    if T.exp.p == 2.0 and not T.domain.embedded:
        _, s, vt = np.linalg.svd(a)
        x = vt[-1].copy()
        k = int(np.argmax(np.abs(x)))
        if x[k] < 0:
            x = -x
        return ApproxWitness(lam, x, float(s[-1]), True)
    num = NormCombo([NormTerm(1.0, a, T.codomain)])
    den = NormCombo([NormTerm(1.0, None, T.domain)])
    best = ratio_search(num, den, T.domain, maximize=False, policy=policy)
    return ApproxWitness(lam, best.x, best.value, False)


def fixed_point_gap(T: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> ApproxWitness:
    return aps_residual(T, 1.0, policy)


def antipodal_gap(T: Operator, policy: NumericPolicy = DEFAULT_POLICY) -> ApproxWitness:
    return aps_residual(T, -1.0, policy)


@dataclass(frozen=True)
class RayEntry:
    alpha: float
    gain_lower: float
    gain_upper: float
    exact: bool
    invertible: bool
    certified_gain: float | None = None
    consistent: bool | None = None


@dataclass(frozen=True)
class RayScanReport:
    direction: str
    entries: list[RayEntry] = field(default_factory=list)

    @property
    def all_invertible(self) -> bool:
        return all(e.invertible for e in self.entries)

    @property
    def consistent(self) -> bool:
        return all(e.consistent is not False for e in self.entries)


def ray_scan(
    T: Operator,
    direction: str,
    grid,
    certificate: HildingCertificate | None = None,
    policy: NumericPolicy = DEFAULT_POLICY,
    tol: float = 1e-9,
) -> RayScanReport:
    """Gain of ``alpha*I - T`` along a real ray.

    For the negative ray and a certificate of (I, T) each entry is compared
    with the certified bound from the shifted homotopy.
    """
    if direction not in ("positive", "negative"):
        raise ValueError("direction must be 'positive' or 'negative'")
    entries = []
    for alpha in map(float, grid):
        if (direction == "positive" and not alpha > 0) or (direction == "negative" and not alpha < 0):
            raise ValueError(f"grid value {alpha!r} is not on the {direction} ray")
        shifted = T.shifted(alpha)
        gains = min_gain_bounds(shifted, policy)
        invertible = gains.lower > 0 and numeric_rank(shifted, policy) == T.domain.dim
        cert = cons = None
        if certificate is not None and direction == "negative":
            cert = ray_gain(certificate, alpha)
            cons = gains.upper >= cert - tol and (not gains.exact or gains.lower >= cert - tol)
        entries.append(RayEntry(alpha, gains.lower, gains.upper, gains.exact, invertible, cert, cons))
    return RayScanReport(direction, entries)

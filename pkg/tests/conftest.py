from __future__ import annotations

import numpy as np
import pytest

from hilding.certificates import HildingCertificate, Status, verify_certificate
from hilding.lp_core import Exponent, SubspaceBasis
from hilding.operators import Operator, plain_norm

# acceptance results, printed one line per criterion at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def scaled_perturbation(rng, rows: int, cols: int, exp, size: float) -> np.ndarray:
    """Random matrix whose sound lp norm bound equals ``size``."""
    e = rng.standard_normal((rows, cols))
    norm, _ = plain_norm(e, Exponent.parse(exp))
    return e * (size / norm)


def certified_identity_pair(rng, n: int, p, symmetric: bool = False, max_tries: int = 20):
    """``(T, c)`` with ``c`` verified for the pair (I, T); ``T = I + E``."""
    for _ in range(max_tries):
        q = rng.uniform(0.05, 0.5)
        E = scaled_perturbation(rng, n, n, p, q)
        T = Operator.from_matrix(np.eye(n) + E, p)
        if symmetric:
            lam = min(0.99, 1.02 * q / (2.0 - q))
            c = HildingCertificate(lam, lam)
        else:
            l2 = rng.uniform(0.0, 0.9)
            l1 = min(0.99, max(0.0, 1.02 * q - l2 * (1.0 - q)) + rng.uniform(0.0, 0.05))
            c = HildingCertificate(l1, l2)
        if verify_certificate(Operator.identity(T.domain), T, c).status is Status.VERIFIED:
            return T, c
    raise RuntimeError("could not build a certified pair")


def certified_general_pair(rng, m: int, n: int, rank: int, p):
    """``(S, T, c)`` with ``T = (I + E) S``; shares the kernel of S."""
    left = rng.standard_normal((m, rank))
    right = rng.standard_normal((rank, n))
    s = left @ right
    q = rng.uniform(0.05, 0.4)
    E = scaled_perturbation(rng, m, m, p, q)
    t = (np.eye(m) + E) @ s
    S, T = Operator.from_matrix(s, p), Operator.from_matrix(t, p)
    c = HildingCertificate(min(0.99, 1.05 * q), 0.0)
    return S, T, c


def random_subspace(rng, n: int, k: int, space) -> SubspaceBasis:
    return SubspaceBasis(rng.standard_normal((n, k)), space)

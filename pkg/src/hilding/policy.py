"""Numeric policy shared by every module.

All tolerances, sample counts and search budgets live in one record that is
passed explicitly; nothing reads global state or environment variables.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class NumericPolicy:
    # singular values <= rank_tol * max(m, n) * sigma_max count as zero
    rank_tol: float = 1e-10
    search_starts: int = 64
    search_max_iter: int = 10_000
    search_rel_tol: float = 1e-12
    # absolute slack (relative to ||Sx|| + ||Tx||) a witness must exceed
    refute_tol: float = 1e-12
    # sphere points per continuation step, on top of canonical directions
    step_samples: int = 256
    # sphere points used for sampled cross-checks (isometry, gain floors)
    check_samples: int = 10_000
    neumann_max_terms: int = 1_000_000
    qr_deflation: float = 1e-14
    qr_iter_factor: int = 30
    seed: int = 0

    def with_seed(self, seed: int) -> "NumericPolicy":
        return replace(self, seed=int(seed))

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_POLICY = NumericPolicy()

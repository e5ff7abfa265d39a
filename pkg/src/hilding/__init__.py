"""Certified numerics for two-parameter operator inequalities on finite-dimensional lp spaces."""

from .certificates import HildingCertificate, Status, Verdict, verify_certificate
from .lp_core import Exponent, Space, SubspaceBasis
from .operators import BoundInterval, Operator
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "BoundInterval",
    "DEFAULT_POLICY",
    "Exponent",
    "HildingCertificate",
    "NumericPolicy",
    "Operator",
    "Space",
    "Status",
    "SubspaceBasis",
    "Verdict",
    "verify_certificate",
]

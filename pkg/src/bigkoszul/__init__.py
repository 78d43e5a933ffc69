"""Koszulity checks for big graded rings over Z/m and filtered exact categories."""

from __future__ import annotations

from .bigring import BigGradedRing, BigRing, Bimodule, restrict_base, restrict_to_diagonal, validate
from .exactla import BoundedComplex, FinModule, smith_normal_form
from .homcheck import KoszulVerdict, PreconditionError, koszul_verdict
from .quadra import QuadraticPresentation, quadratic_closure, quadratic_dual_coring, quadratic_part

__all__ = [
    "BigGradedRing",
    "BigRing",
    "Bimodule",
    "BoundedComplex",
    "FinModule",
    "KoszulVerdict",
    "PreconditionError",
    "QuadraticPresentation",
    "koszul_verdict",
    "quadratic_closure",
    "quadratic_dual_coring",
    "quadratic_part",
    "restrict_base",
    "restrict_to_diagonal",
    "smith_normal_form",
    "validate",
]

__version__ = "0.1.0"

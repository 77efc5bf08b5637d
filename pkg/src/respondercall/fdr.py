"""Benjamini-Hochberg step-up multiplicity control."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["FdrDecision", "bh_adjust"]


@dataclass(frozen=True)
class FdrDecision:
    """Per-test outcome, kept in the input order (index = input position)."""

    index: int
    p: float
    p_bh: float
    rejected: bool


def bh_adjust(pvalues: Sequence[float], q: float) -> list[FdrDecision]:
    """Benjamini-Hochberg adjusted p-values and rejections at FDR level q.

    The adjusted value of the i-th smallest p is min over j >= i of
    min(1, m * p_(j) / j); a test is rejected exactly when its adjusted
    value is at or below q.  Results come back in the input order; an
    empty input yields an empty output.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    p = np.asarray(pvalues, dtype=float)
    if p.ndim != 1:
        raise ValueError("pvalues must be a one-dimensional sequence")
    if p.size == 0:
        return []
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("pvalues must be finite and lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    adjusted_sorted = np.minimum(1.0, np.minimum.accumulate(ranked[::-1])[::-1])
    adjusted = np.empty(m, dtype=float)
    adjusted[order] = adjusted_sorted
    return [
        FdrDecision(index=i, p=float(p[i]), p_bh=float(adjusted[i]), rejected=bool(adjusted[i] <= q))
        for i in range(m)
    ]

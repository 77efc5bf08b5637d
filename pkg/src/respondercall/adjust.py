"""Misclassification-adjusted p-values for a single participant.

Two adjustments of the unadjusted one-sided p-value p* are computed by
scanning the primary p-value p_theta over a confidence set of
misclassification rates built from the paired controls:

* maximally adjusted: min(1, sup p_theta + alpha_prime) over the set at
  level alpha_prime.  Worst case over every rate vector the controls
  cannot rule out, plus the budget spent ruling the others out; valid
  whenever the controls carry the run effects.  An empty set yields 1.

* minimally adjusted: the in-set p_theta closest to p*, over the set at
  level alpha.  When p* already lies within [inf p_theta, sup p_theta]
  the result is exactly p*.  Best case in the sense of changing p* as
  little as the controls allow; undefined (None) when the set is empty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .debias import AssayCounts, unadjusted_p
from .nuisance import NuisanceGrid, SetConfig, build_grid

__all__ = [
    "ResponderResult",
    "max_adjusted_p",
    "min_adjusted_p",
    "analyze_participant",
]


@dataclass(frozen=True)
class ResponderResult:
    """All per-participant p-values plus set diagnostics.

    set_nonempty and p_range describe the level-alpha_prime set used by
    the maximal adjustment; unadjusted_in_set reports whether p* lies
    within the in-set p-value bracket of the level-alpha set used by
    the minimal adjustment.
    """

    p_unadjusted: float
    p_max_adjusted: float
    p_min_adjusted: float | None
    alpha: float
    alpha_prime: float
    set_nonempty: bool
    p_range: tuple[float, float] | None
    unadjusted_in_set: bool


def _max_adjusted_from_grid(grid: NuisanceGrid, alpha_prime: float) -> float:
    if not grid.nonempty:
        return 1.0
    return min(1.0, grid.sup_p + alpha_prime)


def _min_adjusted_from_grid(grid: NuisanceGrid, p_star: float) -> float | None:
    if not grid.nonempty:
        return None
    if grid.inf_p <= p_star <= grid.sup_p:
        return p_star
    candidates = grid.p_theta[grid.in_set]
    distance = np.abs(candidates - p_star)
    # ties in distance resolve toward the smaller p-value
    best = int(np.lexsort((candidates, distance))[0])
    return float(candidates[best])


def max_adjusted_p(
    counts: AssayCounts, config: SetConfig, assume_equal_fn: bool = True
) -> float:
    """Worst-case adjusted p-value at level config.alpha.

    config.alpha plays the role of alpha_prime: it is both the level of
    the confidence set and the additive budget.
    """
    grid = build_grid(counts, config, assume_equal_fn=assume_equal_fn)
    return _max_adjusted_from_grid(grid, config.alpha)


def min_adjusted_p(
    counts: AssayCounts, config: SetConfig, assume_equal_fn: bool = True
) -> float | None:
    """Best-case adjusted p-value, or None when the set is empty."""
    grid = build_grid(counts, config, assume_equal_fn=assume_equal_fn)
    return _min_adjusted_from_grid(grid, unadjusted_p(counts))


def analyze_participant(
    counts: AssayCounts,
    config_max: SetConfig,
    config_min: SetConfig,
    assume_equal_fn: bool = True,
) -> ResponderResult:
    """Compute unadjusted, maximally and minimally adjusted p-values.

    config_max.alpha is the alpha_prime of the maximal adjustment and
    config_min.alpha the level of the minimal adjustment's set; the two
    configurations usually differ only in alpha.
    """
    p_star = unadjusted_p(counts)
    grid_max = build_grid(counts, config_max, assume_equal_fn=assume_equal_fn)
    grid_min = build_grid(counts, config_min, assume_equal_fn=assume_equal_fn)
    p_min = _min_adjusted_from_grid(grid_min, p_star)
    bracketed = grid_min.nonempty and grid_min.inf_p <= p_star <= grid_min.sup_p
    return ResponderResult(
        p_unadjusted=p_star,
        p_max_adjusted=_max_adjusted_from_grid(grid_max, config_max.alpha),
        p_min_adjusted=p_min,
        alpha=config_min.alpha,
        alpha_prime=config_max.alpha,
        set_nonempty=grid_max.nonempty,
        p_range=(grid_max.inf_p, grid_max.sup_p) if grid_max.nonempty else None,
        unadjusted_in_set=bool(bracketed),
    )

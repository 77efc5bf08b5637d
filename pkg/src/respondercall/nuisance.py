"""Confidence sets of misclassification rates consistent with controls.

The paired control samples were processed in the same runs as the
primary samples, so they carry the same per-run misclassification
rates.  Rates theta = (fp0, fn0, fp1, fn1) that the controls cannot
reject at level alpha form a confidence set A(alpha); scanning the
primary p-value over that set is what the adjustment procedures in
:mod:`respondercall.adjust` do.

Two kinds of control are supported:

* ``generic``: the control material has an unknown positive proportion
  that is stable across timepoints.  theta is in the set when the
  pooled z of the corrected control proportions satisfies
  |z| <= ndtri(1 - alpha/2).

* ``negative``: the control material is known truly negative, so each
  timepoint's control directly estimates that run's false positive
  rate.  theta is in the set when fp0 and fp1 each lie in a two-sided
  level-(1 - alpha/2) binomial interval for their control count, the
  two intervals sharing the alpha budget.

Both kinds additionally constrain |fn0 - fn1| <= delta0; the false
negative rates are otherwise unidentified by controls and are bounded
only by the grid limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np
from scipy.special import ndtri
from scipy.stats import beta as beta_dist

from .debias import (
    DENOM_EPS,
    AssayCounts,
    MisclassRates,
    _pooled_z_arrays,
    p_value_arrays as _p_value_arrays,
)

__all__ = [
    "ControlKind",
    "SetConfig",
    "NuisanceGrid",
    "wilson_interval",
    "clopper_pearson_interval",
    "in_confidence_set",
    "default_fp_max",
    "build_grid",
]


class ControlKind(str, Enum):
    GENERIC = "generic"
    NEGATIVE = "negative"


_INTERVALS = ("wilson", "clopper-pearson")


@dataclass(frozen=True)
class SetConfig:
    """Configuration of the confidence set and its search grid.

    fp_max of None means "derive from the control counts" via
    :func:`default_fp_max` when the grid is built.  grid_fp and grid_fn
    are the number of grid values per false positive / false negative
    axis; refine_levels local refinement rounds are run around the
    in-set extremes of the primary p-value, halving the grid spacing
    each round.
    """

    alpha: float
    control_kind: ControlKind = ControlKind.GENERIC
    delta0: float = 0.0
    fp_max: float | None = None
    fn_max: float = 0.5
    grid_fp: int = 101
    grid_fn: int = 21
    refine_levels: int = 2
    interval: str = "wilson"

    def __post_init__(self) -> None:
        object.__setattr__(self, "control_kind", ControlKind(self.control_kind))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 <= self.delta0 <= 1.0:
            raise ValueError(f"delta0 must lie in [0, 1], got {self.delta0}")
        if self.fp_max is not None and not 0.0 <= self.fp_max <= 1.0:
            raise ValueError(f"fp_max must lie in [0, 1], got {self.fp_max}")
        if not 0.0 <= self.fn_max <= 1.0:
            raise ValueError(f"fn_max must lie in [0, 1], got {self.fn_max}")
        if self.grid_fp < 2 or self.grid_fn < 2:
            raise ValueError("grid_fp and grid_fn must be at least 2")
        if self.refine_levels < 0:
            raise ValueError("refine_levels must be non-negative")
        if self.interval not in _INTERVALS:
            raise ValueError(f"interval must be one of {_INTERVALS}")


def wilson_interval(x: int, n: int, confidence: float) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if n < 1 or not 0 <= x <= n:
        raise ValueError(f"need 0 <= x <= n with n >= 1, got x={x}, n={n}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = float(ndtri((1.0 + confidence) / 2.0))
    phat = x / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2.0 * n)) / denom
    half = (z / denom) * np.sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n))
    # At the boundary counts the score equation has an exact root at 0 or
    # 1; compute those directly so rounding cannot nudge the bound past it.
    lo = 0.0 if x == 0 else max(0.0, center - half)
    hi = 1.0 if x == n else min(1.0, center + half)
    return (lo, hi)


def clopper_pearson_interval(x: int, n: int, confidence: float) -> tuple[float, float]:
    """Two-sided Clopper-Pearson (exact) interval for a binomial proportion."""
    if n < 1 or not 0 <= x <= n:
        raise ValueError(f"need 0 <= x <= n with n >= 1, got x={x}, n={n}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    a = (1.0 - confidence) / 2.0
    lo = 0.0 if x == 0 else float(beta_dist.ppf(a, x, n - x + 1))
    hi = 1.0 if x == n else float(beta_dist.ppf(1.0 - a, x + 1, n - x))
    return (lo, hi)


def default_fp_max(counts: AssayCounts) -> float:
    """Default upper grid bound for the false positive axes.

    Five times the larger observed control proportion plus a 10-count
    allowance at the smaller control total, capped at 0.5.  This keeps
    the grid comfortably wider than any rate the controls could fail
    to reject.
    """
    top = max(counts.c0 / counts.C0, counts.c1 / counts.C1)
    return min(0.5, 5.0 * top + 10.0 / min(counts.C0, counts.C1))


def _fp_bounds(counts: AssayCounts, config: SetConfig) -> tuple[
    tuple[float, float], tuple[float, float]
]:
    """Per-timepoint acceptance intervals for fp under a negative control."""
    confidence = 1.0 - config.alpha / 2.0
    interval = (
        wilson_interval if config.interval == "wilson" else clopper_pearson_interval
    )
    return (
        interval(counts.c0, counts.C0, confidence),
        interval(counts.c1, counts.C1, confidence),
    )


def _membership_arrays(counts: AssayCounts, config: SetConfig, fp0, fn0, fp1, fn1):
    """Vectorized set membership for candidate rate arrays."""
    fp0, fn0 = np.asarray(fp0, dtype=float), np.asarray(fn0, dtype=float)
    fp1, fn1 = np.asarray(fp1, dtype=float), np.asarray(fn1, dtype=float)
    usable = (1.0 - fn0 - fp0 >= DENOM_EPS) & (1.0 - fn1 - fp1 >= DENOM_EPS)
    close_fn = np.abs(fn0 - fn1) <= config.delta0
    if config.control_kind is ControlKind.NEGATIVE:
        (lo0, hi0), (lo1, hi1) = _fp_bounds(counts, config)
        inside = (fp0 >= lo0) & (fp0 <= hi0) & (fp1 >= lo1) & (fp1 <= hi1)
    else:
        crit = float(ndtri(1.0 - config.alpha / 2.0))
        z = _pooled_z_arrays(
            counts.c0, counts.C0, counts.c1, counts.C1, fp0, fn0, fp1, fn1
        )
        # NaN z (unusable denominator) correctly compares False here.
        with np.errstate(invalid="ignore"):
            inside = np.abs(z) <= crit
    return usable & close_fn & inside


def in_confidence_set(
    counts: AssayCounts, theta: MisclassRates, config: SetConfig
) -> bool:
    """Whether the controls fail to reject theta at the configured level."""
    return bool(
        _membership_arrays(counts, config, theta.fp0, theta.fn0, theta.fp1, theta.fn1)
    )


@dataclass(frozen=True)
class NuisanceGrid:
    """Evaluated rate grid: membership and primary p-value per point.

    Point arrays are deduplicated and sorted lexicographically by
    (fp0, fn0, fp1, fn1).  p_theta is NaN at points whose correction
    denominator is unusable; such points are never in the set.  sup_p
    and inf_p are None exactly when the set is empty (nonempty False).
    """

    config: SetConfig
    fp_max: float
    fn_max: float
    fp0: np.ndarray
    fn0: np.ndarray
    fp1: np.ndarray
    fn1: np.ndarray
    in_set: np.ndarray
    p_theta: np.ndarray
    sup_p: float | None
    inf_p: float | None
    nonempty: bool

    @property
    def n_points(self) -> int:
        return int(self.fp0.shape[0])

    def theta_at(self, i: int) -> MisclassRates:
        return MisclassRates(
            float(self.fp0[i]), float(self.fn0[i]), float(self.fp1[i]), float(self.fn1[i])
        )

    def to_rows(self) -> Iterator[tuple[float, float, float, float, bool, float]]:
        """Yield (fp0, fn0, fp1, fn1, in_set, p_theta) per grid point."""
        for i in range(self.n_points):
            yield (
                float(self.fp0[i]),
                float(self.fn0[i]),
                float(self.fp1[i]),
                float(self.fn1[i]),
                bool(self.in_set[i]),
                float(self.p_theta[i]),
            )


def _axis(limit: float, n: int) -> np.ndarray:
    return np.unique(np.linspace(0.0, limit, n))


def _local_values(center: float, step: float, limit: float) -> np.ndarray:
    if step <= 0.0:
        return np.array([center])
    offsets = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * step
    return np.clip(center + offsets, 0.0, limit)


def build_grid(
    counts: AssayCounts, config: SetConfig, assume_equal_fn: bool = True
) -> NuisanceGrid:
    """Enumerate and evaluate the rate grid for one participant.

    With assume_equal_fn the false negative axes collapse to a single
    shared axis (fn0 = fn1 everywhere); otherwise fn0 and fn1 vary
    independently and points with |fn0 - fn1| > delta0 are simply
    flagged out of the set.  After the base rectangular enumeration,
    refine_levels rounds add local points around the in-set argmax and
    argmin of the primary p-value, halving the axis spacing each round,
    so the reported [inf_p, sup_p] bracket can only widen.
    """
    fp_max = config.fp_max if config.fp_max is not None else default_fp_max(counts)
    fn_max = config.fn_max
    fp_axis = _axis(fp_max, config.grid_fp)
    fn_axis = _axis(fn_max, config.grid_fn)
    step_fp = float(fp_axis[1] - fp_axis[0]) if fp_axis.size > 1 else 0.0
    step_fn = float(fn_axis[1] - fn_axis[0]) if fn_axis.size > 1 else 0.0

    def evaluate(fp0, fn0, fp1, fn1):
        member = _membership_arrays(counts, config, fp0, fn0, fp1, fn1)
        p = _p_value_arrays(counts.n0, counts.N0, counts.n1, counts.N1, fp0, fn0, fp1, fn1)
        return member, p

    if assume_equal_fn:
        g0, g1, gn = np.meshgrid(fp_axis, fp_axis, fn_axis, indexing="ij")
        fp0, fp1, fn_shared = g0.ravel(), g1.ravel(), gn.ravel()
        fn0, fn1 = fn_shared, fn_shared.copy()
    else:
        g0, gn0, g1, gn1 = np.meshgrid(fp_axis, fn_axis, fp_axis, fn_axis, indexing="ij")
        fp0, fn0, fp1, fn1 = g0.ravel(), gn0.ravel(), g1.ravel(), gn1.ravel()
    in_set, p_theta = evaluate(fp0, fn0, fp1, fn1)

    for level in range(1, config.refine_levels + 1):
        if not in_set.any():
            break
        h_fp = step_fp / 2.0**level
        h_fn = step_fn / 2.0**level
        masked = np.where(in_set, p_theta, np.nan)
        targets = {int(np.nanargmax(masked)), int(np.nanargmin(masked))}
        blocks: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
        for i in sorted(targets):
            a0 = _local_values(float(fp0[i]), h_fp, fp_max)
            a1 = _local_values(float(fp1[i]), h_fp, fp_max)
            if assume_equal_fn:
                an = _local_values(float(fn0[i]), h_fn, fn_max)
                b0, b1, bn = np.meshgrid(a0, a1, an, indexing="ij")
                blocks.append((b0.ravel(), bn.ravel(), b1.ravel(), bn.ravel()))
            else:
                an0 = _local_values(float(fn0[i]), h_fn, fn_max)
                an1 = _local_values(float(fn1[i]), h_fn, fn_max)
                b0, bn0, b1, bn1 = np.meshgrid(a0, an0, a1, an1, indexing="ij")
                blocks.append((b0.ravel(), bn0.ravel(), b1.ravel(), bn1.ravel()))
        new_fp0 = np.concatenate([b[0] for b in blocks])
        new_fn0 = np.concatenate([b[1] for b in blocks])
        new_fp1 = np.concatenate([b[2] for b in blocks])
        new_fn1 = np.concatenate([b[3] for b in blocks])
        new_in, new_p = evaluate(new_fp0, new_fn0, new_fp1, new_fn1)
        fp0 = np.concatenate([fp0, new_fp0])
        fn0 = np.concatenate([fn0, new_fn0])
        fp1 = np.concatenate([fp1, new_fp1])
        fn1 = np.concatenate([fn1, new_fn1])
        in_set = np.concatenate([in_set, new_in])
        p_theta = np.concatenate([p_theta, new_p])

    # np.unique sorts rows lexicographically and keeps first occurrences,
    # which is exactly the deduplicated deterministic ordering wanted here.
    rows = np.column_stack([fp0, fn0, fp1, fn1])
    _, keep = np.unique(rows, axis=0, return_index=True)
    fp0, fn0, fp1, fn1 = fp0[keep], fn0[keep], fp1[keep], fn1[keep]
    in_set, p_theta = in_set[keep], p_theta[keep]

    if in_set.any():
        selected = p_theta[in_set]
        sup_p: float | None = float(selected.max())
        inf_p: float | None = float(selected.min())
        nonempty = True
    else:
        sup_p = inf_p = None
        nonempty = False
    return NuisanceGrid(
        config=config,
        fp_max=float(fp_max),
        fn_max=float(fn_max),
        fp0=fp0,
        fn0=fn0,
        fp1=fp1,
        fn1=fn1,
        in_set=in_set,
        p_theta=p_theta,
        sup_p=sup_p,
        inf_p=inf_p,
        nonempty=nonempty,
    )

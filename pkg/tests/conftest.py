"""Shared fixtures: worked-example counts and an independent reference test."""

import math

import pytest

from respondercall import AssayCounts, SetConfig


@pytest.fixture(scope="session")
def participant_one():
    """Large primary increase, control counts far apart."""
    return AssayCounts(31, 69_540, 85, 93_562, 8, 93_883, 43, 212_650)


@pytest.fixture(scope="session")
def participant_two():
    """Same primary counts, control counts compatible with no batch effect."""
    return AssayCounts(31, 69_540, 85, 93_562, 8, 93_883, 15, 212_650)


@pytest.fixture(scope="session")
def participant_three():
    """Same primary counts, control rate dropping from T0 to T1."""
    return AssayCounts(31, 69_540, 85, 93_562, 8, 93_883, 2, 212_650)


@pytest.fixture(scope="session")
def pinned_config():
    """False negatives pinned to zero, dense false-positive axes."""
    return SetConfig(
        alpha=0.05, fp_max=0.002, fn_max=0.0, grid_fp=201, grid_fn=2, refine_levels=2
    )


def pooled_two_proportion_p(n0: int, N0: int, n1: int, N1: int) -> float:
    """One-sided pooled two-proportion z-test, written from the formula.

    Kept deliberately separate from the package's own code path so
    comparisons against it are meaningful.
    """
    pooled = (n0 + n1) / (N0 + N1)
    var = pooled * (1.0 - pooled) * (1.0 / N0 + 1.0 / N1)
    z = (n1 / N1 - n0 / N0) / math.sqrt(var)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@pytest.fixture(scope="session")
def pooled_reference():
    return pooled_two_proportion_p


GOLDEN_CSV = """participant_id,n0,N0,n1,N1,c0,C0,c1,C1
P1,31,69540,85,93562,8,93883,43,212650
P2,31,69540,85,93562,8,93883,15,212650
P3,31,69540,85,93562,8,93883,2,212650
"""


@pytest.fixture()
def golden_study_file(tmp_path):
    path = tmp_path / "study.csv"
    path.write_text(GOLDEN_CSV, encoding="utf-8")
    return path

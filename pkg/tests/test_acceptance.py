"""End-to-end acceptance checks.

Each test prints one verdict line (PASS or FAIL) so a full run reads as a
ten-line scoreboard.  Simulation-backed checks compare against published
operating characteristics at 500 or 1000 replications and allow the stated
margin plus Monte Carlo noise; everything else is deterministic.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np

from respondercall import (
    AssayCounts,
    MisclassRates,
    SetConfig,
    SimulationConfig,
    analyze_participant,
    background_subtracted_magnitude,
    bh_adjust,
    build_grid,
    in_confidence_set,
    p_value_at,
    run_cell,
    run_replications,
    unadjusted_p,
)

from conftest import pooled_two_proportion_p


def _verdict(capsys, number, name, failures):
    status = "FAIL" if failures else "PASS"
    with capsys.disabled():
        print(f"ACCEPTANCE {number:02d} ({name}): {status}")
    assert not failures, "; ".join(failures)


def _mcse_pp(table_pct, reps):
    p = table_pct / 100.0
    return 100.0 * math.sqrt(p * (1.0 - p) / reps)


PARTICIPANTS = {
    "one": AssayCounts(31, 69_540, 85, 93_562, 8, 93_883, 43, 212_650),
    "two": AssayCounts(31, 69_540, 85, 93_562, 8, 93_883, 15, 212_650),
    "three": AssayCounts(31, 69_540, 85, 93_562, 8, 93_883, 2, 212_650),
}

PINNED = SetConfig(
    alpha=0.05, fp_max=0.002, fn_max=0.0, grid_fp=201, grid_fn=2, refine_levels=2
)


def test_criterion_01_worked_example_goldens(capsys):
    failures = []
    started = time.perf_counter()
    results = {
        name: analyze_participant(counts, PINNED, PINNED)
        for name, counts in PARTICIPANTS.items()
    }
    elapsed = time.perf_counter() - started

    one, two, three = results["one"], results["two"], results["three"]
    if f"{one.p_unadjusted:.0e}" != "3e-04":
        failures.append(f"p* formats as {one.p_unadjusted:.0e}, wanted 3e-04")

    published = {
        "one": (4e-4, 8.9e-3),
        "two": (2e-5, 6e-4),
        "three": (1e-5, 6e-5),
    }
    for name, (low_ref, high_ref) in published.items():
        low, high = results[name].p_range
        if abs(low - low_ref) / low_ref > 0.15:
            failures.append(f"{name}: lower endpoint {low:.3e} vs {low_ref:.1e}")
        if abs(high - high_ref) / high_ref > 0.15:
            failures.append(f"{name}: upper endpoint {high:.3e} vs {high_ref:.1e}")

    if one.p_min_adjusted != one.p_range[0]:
        failures.append("participant one: minimal adjustment is not the lower endpoint")
    if two.p_min_adjusted != two.p_unadjusted:
        failures.append("participant two: minimal adjustment is not p*")
    if three.p_min_adjusted != three.p_range[1]:
        failures.append("participant three: minimal adjustment is not the upper endpoint")
    if elapsed >= 1.0:
        failures.append(f"took {elapsed:.2f}s, budget 1s")
    _verdict(capsys, 1, "worked-example goldens", failures)


def test_criterion_02_membership_signs(capsys):
    failures = []
    started = time.perf_counter()
    config = SetConfig(alpha=0.05)
    membership = {
        name: in_confidence_set(counts, MisclassRates.zero(), config)
        for name, counts in PARTICIPANTS.items()
    }
    elapsed = time.perf_counter() - started
    expected = {"one": False, "two": True, "three": False}
    for name, want in expected.items():
        if membership[name] != want:
            failures.append(f"{name}: theta=0 membership {membership[name]}, wanted {want}")
    if elapsed >= 1.0:
        failures.append(f"took {elapsed:.2f}s, budget 1s")
    _verdict(capsys, 2, "set membership signs", failures)


def test_criterion_03_table_cells(capsys):
    failures = []

    cell_a = run_cell(SimulationConfig(scenario="I", gamma=4.0, n_control=100_000, reps=500))
    targets_a = [
        ("unadjusted type1", cell_a.unadjusted_type1, 2.4),
        ("unadjusted power", cell_a.unadjusted_power, 48.6),
        ("max-adjusted type1", cell_a.max_adjusted_type1, 0.2),
        ("max-adjusted power", cell_a.max_adjusted_power, 45.4),
        ("min-adjusted type1", cell_a.min_adjusted_type1, 2.5),
        ("min-adjusted power", cell_a.min_adjusted_power, 48.6),
        ("oracle power", cell_a.oracle_power, 49.7),
    ]
    for label, got, table in targets_a:
        tolerance = 3.0 + 3.0 * _mcse_pp(table, 500)
        if abs(got - table) > tolerance:
            failures.append(f"cell A {label}: {got:.1f} vs {table} (tol {tolerance:.1f})")

    cell_b = run_cell(SimulationConfig(scenario="IV", gamma=2.0, n_control=1_000, reps=500))
    if abs(cell_b.unadjusted_type1 - 45.0) > 4.0:
        failures.append(f"cell B unadjusted type1: {cell_b.unadjusted_type1:.1f} vs 45.0 +/- 4")
    if cell_b.max_adjusted_type1 > 5.0:
        failures.append(f"cell B max-adjusted type1: {cell_b.max_adjusted_type1:.1f} > 5")
    _verdict(capsys, 3, "table-cell reproduction", failures)


def test_criterion_04_worst_case_validity(capsys):
    failures = []
    replications = run_replications(
        SimulationConfig(
            scenario="III", gamma=2.0, n_control=10_000, reps=1000, responder_prob=0.0
        )
    )
    rate = sum(r.p_max_adjusted <= 0.05 for r in replications) / len(replications)
    bound = 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / 1000)
    if rate > bound:
        failures.append(f"max-adjusted null rejection {rate:.4f} > {bound:.4f}")
    _verdict(capsys, 4, "worst-case validity", failures)


def test_criterion_05_best_case_dominance(capsys):
    failures = []
    replications = run_replications(
        SimulationConfig(
            scenario="IV", gamma=2.0, n_control=100_000, reps=1000, responder_prob=0.0
        )
    )
    wins = 0
    for r in replications:
        if r.p_min_adjusted is None:
            continue
        if abs(r.p_min_adjusted - r.p_oracle) <= abs(r.p_unadjusted - r.p_oracle):
            wins += 1
    share = wins / len(replications)
    if share < 0.93:
        failures.append(f"minimal adjustment closer to truth in only {share:.1%}")
    _verdict(capsys, 5, "best-case dominance", failures)


def test_criterion_06_textbook_equivalence(capsys):
    failures = []
    rng = np.random.default_rng(777)
    worst = 0.0
    for _ in range(10_000):
        N0 = int(rng.integers(10, 100_001))
        N1 = int(rng.integers(10, 100_001))
        while True:
            n0 = int(rng.integers(0, N0 + 1))
            n1 = int(rng.integers(0, N1 + 1))
            if 0 < n0 + n1 < N0 + N1:
                break
        counts = AssayCounts(n0, N0, n1, N1, 0, 1, 0, 1)
        diff = abs(
            p_value_at(counts, MisclassRates.zero())
            - pooled_two_proportion_p(n0, N0, n1, N1)
        )
        worst = max(worst, diff)
    if worst > 1e-12:
        failures.append(f"worst deviation {worst:.2e} > 1e-12")
    _verdict(capsys, 6, "textbook equivalence", failures)


def _small_instance(rng):
    N0 = int(rng.integers(150, 801))
    N1 = int(rng.integers(150, 801))
    C0 = int(rng.integers(150, 801))
    C1 = int(rng.integers(150, 801))
    u0 = float(rng.uniform(0.02, 0.08))
    u1 = u0 * float(np.exp(rng.uniform(-0.6, 0.6)))
    p0 = float(rng.uniform(0.02, 0.08))
    p1 = p0 * float(rng.uniform(0.6, 2.5))
    c0 = int(rng.binomial(C0, u0))
    c1 = int(rng.binomial(C1, min(u1, 0.5)))
    n0 = int(rng.binomial(N0, min(p0 + u0, 0.9)))
    n1 = int(rng.binomial(N1, min(p1 + u1, 0.9)))
    counts = AssayCounts(n0, N0, n1, N1, c0, C0, c1, C1)
    top = max(c0 / C0, c1 / C1)
    pbar = (n0 + n1) / (N0 + N1)
    # Cap the search box near the statistic's own resolution so both grids
    # can resolve the membership boundary.
    scale = 2.5 * math.sqrt(max(pbar, 1.0 / (N0 + N1)) * (1.0 / N0 + 1.0 / N1))
    bound = min(0.4, 1.6 * top + 3.0 / min(C0, C1), scale)
    return counts, bound


def test_criterion_07_grid_matches_exhaustive(capsys):
    failures = []
    rng = np.random.default_rng(0)
    made = skipped = 0
    worst = 0.0
    while made < 100:
        counts, bound = _small_instance(rng)
        coarse = build_grid(
            counts,
            SetConfig(alpha=0.05, fp_max=bound, fn_max=0.0, grid_fp=21, grid_fn=2,
                      refine_levels=3),
        )
        fine = build_grid(
            counts,
            SetConfig(alpha=0.05, fp_max=bound, fn_max=0.0, grid_fp=201, grid_fn=2,
                      refine_levels=0),
        )
        if not (coarse.nonempty and fine.nonempty):
            skipped += 1
            if skipped > 20:
                failures.append("too many empty-set instances to compare")
                break
            continue
        made += 1
        relative = abs(coarse.sup_p - fine.sup_p) / fine.sup_p
        worst = max(worst, relative)
        if relative > 0.10:
            failures.append(f"instance {made}: sup off by {relative:.1%}")
        p_star = unadjusted_p(counts)
        bracketed_coarse = coarse.inf_p <= p_star <= coarse.sup_p
        bracketed_fine = fine.inf_p <= p_star <= fine.sup_p
        if bracketed_coarse != bracketed_fine:
            failures.append(f"instance {made}: bracketing membership differs")
    _verdict(capsys, 7, "grid vs exhaustive enumeration", failures)


def test_criterion_08_step_up_adjustment(capsys):
    failures = []
    decisions = bh_adjust([0.01, 0.02, 0.03, 0.9], 0.05)
    if [d.p_bh for d in decisions] != [0.04, 0.04, 0.04, 0.9]:
        failures.append(f"adjusted values {[d.p_bh for d in decisions]}")
    if [d.rejected for d in decisions] != [True, True, True, False]:
        failures.append("rejection pattern wrong")

    rng = np.random.default_rng(2024)
    base = rng.uniform(0.0, 1.0, size=15)
    reference = [(d.p_bh, d.rejected) for d in bh_adjust(base, 0.05)]
    for trial in range(100):
        perm = rng.permutation(base.size)
        permuted = [(d.p_bh, d.rejected) for d in bh_adjust(base[perm], 0.05)]
        if any(
            permuted[slot] != reference[original]
            for slot, original in enumerate(perm)
        ):
            failures.append(f"permutation {trial} changed a decision")
            break
    _verdict(capsys, 8, "step-up adjustment", failures)


def test_criterion_09_deterministic_cli(capsys, tmp_path):
    failures = []
    args = [
        sys.executable, "-m", "respondercall", "simulate",
        "--scenario", "I", "--gamma", "2", "--n-control", "1000",
        "--reps", "12", "--seed", "1",
    ]

    def run(threads, out_name):
        env = dict(os.environ)
        env["RESPONDER_THREADS"] = threads
        out = tmp_path / out_name
        proc = subprocess.run(
            [*args, "--out", str(out)], capture_output=True, text=True, env=env
        )
        if proc.returncode != 0:
            failures.append(f"simulate exited {proc.returncode}: {proc.stderr}")
            return b""
        return out.read_bytes()

    first = run("4", "first.csv")
    second = run("4", "second.csv")
    serial = run("1", "serial.csv")
    if first != second:
        failures.append("two identically seeded runs differ")
    if first != serial:
        failures.append("serial and parallel runs differ")
    if not first:
        failures.append("no output produced")
    _verdict(capsys, 9, "deterministic simulate runs", failures)


def test_criterion_10_magnitude_endpoints(capsys):
    failures = []
    first = AssayCounts(4, 51_006, 163, 105_179, 13, 102_745, 84, 213_187)
    fourth = AssayCounts(17, 27_563, 80, 27_968, 34, 79_041, 8, 55_784)
    if round(background_subtracted_magnitude(first), 2) != 0.12:
        failures.append(
            f"first worked example: {background_subtracted_magnitude(first):.4f} != 0.12"
        )
    if round(background_subtracted_magnitude(fourth), 2) != 0.25:
        failures.append(
            f"fourth worked example: {background_subtracted_magnitude(fourth):.4f} != 0.25"
        )
    _verdict(capsys, 10, "magnitude endpoints", failures)

"""Acceptance gate: one test per criterion, each logging a PASS/FAIL line."""

import math
import time
import warnings
from dataclasses import replace

import numpy as np
import pytest

from helpers import random_table
from irsplace import bundled_scenario, run_optimize
from irsplace.capacity import channel_rate, equal_power_rate, water_fill
from irsplace.channel import (
    AntennaArray,
    CascadeScaling,
    RadioParams,
    build_cascade,
    cascade_matrix,
    focus_phase_profile,
    los_channel,
)
from irsplace.geometry import as_unit, size_reflector
from irsplace.placement import build_candidate_set, build_rate_table, exhaustive_oracle, solve_assignment
from irsplace.runner import evaluate_fixed

FREQS = (6.0, 28.0, 60.0)
SEPARATIONS = (20, 30, 40)


@pytest.fixture(scope="module")
def optimized(table1):
    """Optimized reports at each frequency plus the solve time."""
    t0 = time.perf_counter()
    reports = {f: run_optimize(table1.with_frequency(f), interim=False) for f in FREQS}
    return reports, time.perf_counter() - t0


def verdict(log, name, ok, detail):
    log(name, ok, detail)
    assert ok, f"{name}: {detail}"


def fmt(xs):
    return " / ".join(f"{x:.2f}" for x in xs)


def test_c01_direct_rates(table1, acceptance_log):
    t0 = time.perf_counter()
    avgs = []
    for f in FREQS:
        s = table1.with_frequency(f)
        bs, radio = s.bs_antenna(), s.radio
        rates = [channel_rate(los_channel(bs, s.user_antenna(c), radio), radio).rate for c in s.asa_centers]
        avgs.append(sum(rates) / len(rates))
    elapsed = time.perf_counter() - t0
    target = (13.1, 8.6, 6.5)
    ok = all(abs(a - b) <= 1.0 for a, b in zip(avgs, target)) and elapsed < 1.0
    verdict(acceptance_log, "C1 direct rates", ok, f"{fmt(avgs)} vs {fmt(target)} (+-1.0), {elapsed:.3f} s")


def test_c02_irs_aided_averages(optimized, acceptance_log):
    reports, elapsed = optimized
    opt = [reports[f].average_optimized for f in FREQS]
    direct = [reports[f].average_direct for f in FREQS]
    target = (35.5, 34.7, 33.1)
    spread_opt, spread_dir = max(opt) - min(opt), max(direct) - min(direct)
    ok = all(abs(a - b) <= 3.0 for a, b in zip(opt, target)) and spread_opt < spread_dir and elapsed < 30
    verdict(
        acceptance_log,
        "C2 IRS-aided averages",
        ok,
        f"{fmt(opt)} vs {fmt(target)} (+-3.0), spread {spread_opt:.2f} < {spread_dir:.2f}, {elapsed:.1f} s",
    )


def test_c03_cap_ablation(table1, optimized, acceptance_log):
    capped = optimized[0][6.0]
    free = run_optimize(table1.with_cap(None), interim=False)
    area = free.mean_reflector_area
    ok = (
        free.average_optimized > capped.average_optimized
        and abs(free.average_optimized - 39.7) <= 3.0
        and abs(area - 0.56) <= 0.15
    )
    verdict(
        acceptance_log,
        "C3 cap ablation",
        ok,
        f"{capped.average_optimized:.2f} -> {free.average_optimized:.2f} (39.7 +-3.0), "
        f"mean area {area:.3f} m^2 (0.56 +-0.15)",
    )


def test_c04_mismatch_penalty(table1, optimized, acceptance_log):
    reports = optimized[0]
    best = reports[60.0].average_optimized
    forced = evaluate_fixed(table1.with_frequency(60.0), reports[28.0].assignment.subsets).average_optimized
    gap = best - forced
    ok = forced < best and abs(gap - 0.6) <= 0.5
    verdict(
        acceptance_log,
        "C4 mismatch penalty",
        ok,
        f"forced {forced:.3f} vs optimum {best:.3f}, gap {gap:.3f} (0.6 +-0.5, strict)",
    )


def test_c05_solver_exactness(acceptance_log):
    t0 = time.perf_counter()
    mismatches = []
    for d in SEPARATIONS:
        base = bundled_scenario(f"table1_D{d}")
        for f in FREQS:
            s = base.with_frequency(f)
            table = build_rate_table(s, build_candidate_set(s))
            if solve_assignment(table).objective != exhaustive_oracle(table).objective:
                mismatches.append(f"D={d} f={f}")
    rng = np.random.default_rng(20240601)
    for trial in range(1000):
        xi, M, s_max = int(rng.integers(1, 5)), int(rng.integers(0, 7)), int(rng.integers(1, 3))
        table = random_table(rng, xi, M, s_max, integer=bool(trial % 4 == 0))
        if solve_assignment(table).objective != exhaustive_oracle(table).objective:
            mismatches.append(f"trial {trial}")
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 60
    verdict(
        acceptance_log,
        "C5 solver exactness",
        ok,
        f"9 benchmark instances + 1000 random tables, {len(mismatches)} mismatches, {elapsed:.1f} s",
    )


def test_c06_water_filling(acceptance_log):
    rng = np.random.default_rng(6)
    worst_sum = worst_level = 0.0
    below_equal = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 9))
        s = 10 ** rng.uniform(-4, 2, n)
        p, noise = 10 ** rng.uniform(-4, 2), 10 ** rng.uniform(-4, 2)
        a = water_fill(s, p, noise)
        worst_sum = max(worst_sum, abs(a.powers.sum() - p) / p)
        active = a.powers > 0
        level = a.powers[active] + noise / a.singular_values[active] ** 2
        worst_level = max(worst_level, float(np.max(np.abs(level - a.water_level)) / a.water_level))
        if a.rate < equal_power_rate(s, p, noise):
            below_equal += 1
    ok = worst_sum <= 1e-9 and worst_level <= 1e-9 and below_equal == 0
    verdict(
        acceptance_log,
        "C6 water-filling",
        ok,
        f"max power-sum error {worst_sum:.1e}, max level spread {worst_level:.1e}, "
        f"{below_equal} below equal-power",
    )


def test_c07_focusing_identity(acceptance_log):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        radio = RadioParams(float(rng.choice(FREQS)) * 1e9, 2.0, 2.0, 1e-2, 1e-12)
        center = rng.uniform(-30, 30, 3)
        normal = as_unit(rng.normal(size=3))
        tangent = as_unit(np.cross(normal, rng.normal(size=3)))
        theta_b, theta_u = rng.uniform(0, 1.3, 2)
        bs = center + rng.uniform(5, 60) * (math.cos(theta_b) * normal + math.sin(theta_b) * tangent)
        ue = center + rng.uniform(5, 60) * (math.cos(theta_u) * normal - math.sin(theta_u) * tangent)
        refl = size_reflector(center, normal, radio.wavelength / 4, 0.01, ue, radio.wavelength)
        alpha = rng.uniform(0.3, 1.0)
        profile = focus_phase_profile(refl, bs, ue, radio, loss=alpha)
        c = build_cascade(refl, AntennaArray(bs[None, :]), AntennaArray(ue[None, :]), profile, radio)
        gain = abs(cascade_matrix(c, CascadeScaling.NORMALIZED)[0, 0]) ** 2
        target = alpha**2 * c.beta_c
        worst = max(worst, abs(gain - target) / target)
        unnorm = abs(cascade_matrix(c, CascadeScaling.UNNORMALIZED)[0, 0]) ** 2
        assert unnorm == pytest.approx(target * refl.num_cells**2, rel=1e-6)
    verdict(acceptance_log, "C7 focusing identity", worst <= 1e-6, f"max relative error {worst:.1e} over 100 geometries")


def _objective(s):
    return solve_assignment(build_rate_table(s, build_candidate_set(s))).objective


def test_c08_monotonicity(table1, acceptance_log):
    sweeps = {
        "incidence": [replace(table1, incidence_threshold_deg=v) for v in (60.0, 70.0, 80.0)],
        "reflection": [replace(table1, reflection_threshold_deg=v) for v in (60.0, 70.0, 80.0)],
        "s_max": [replace(table1, s_max=v) for v in (1, 2, 3)],
        "P_tot": [replace(table1, total_power_dbm=v) for v in (0.0, 10.0, 20.0)],
    }
    results = {k: [_objective(s) for s in v] for k, v in sweeps.items()}
    ok = all(b >= a for vals in results.values() for a, b in zip(vals, vals[1:]))
    detail = "; ".join(f"{k} {fmt(v)}" for k, v in results.items())
    verdict(acceptance_log, "C8 monotonicity", ok, detail)


def test_c09_candidate_filtering(table1, acceptance_log):
    c = build_candidate_set(table1)
    irs5_nowhere = 4 in c.globally_infeasible
    irs6_limited = 5 not in c.per_asa_feasible[1] and 5 not in c.per_asa_feasible[2]
    ok = irs5_nowhere and irs6_limited
    verdict(
        acceptance_log,
        "C9 candidate filtering",
        ok,
        f"IRS 5 feasible nowhere: {irs5_nowhere}; IRS 6 excluded from ASA 2 and 3: {irs6_limited}",
    )


def test_c10_separation_sweep(acceptance_log):
    rates, violations, worst_drop = {}, [], -math.inf
    for f in FREQS:
        for d in SEPARATIONS:
            rep = run_optimize(bundled_scenario(f"table1_D{d}").with_frequency(f), interim=(d == 40))
            rates[(f, d)] = (rep.per_asa[0].irs_rate, rep.per_asa[2].irs_rate)
            if d == 40:
                for p in rep.interim:
                    worst_drop = max(worst_drop, rep.per_asa[p.nearest_asa].irs_rate - p.rate)
        for k, label in ((0, "ASA 1"), (1, "ASA 3")):
            seq = [rates[(f, d)][k] for d in SEPARATIONS]
            if not all(b <= a for a, b in zip(seq, seq[1:])):
                violations.append(f"{label} @ {f:g} GHz: {fmt(seq)}")
    if worst_drop < 3.0:
        warnings.warn(f"largest interim drop at D=40 m is {worst_drop:.2f} < 3 bits/s/Hz")
    detail = (
        (f"increases: {'; '.join(violations)}" if violations else "ASA 1/3 non-increasing at all frequencies")
        + f"; largest interim drop {worst_drop:.2f} bits/s/Hz (soft >= 3: {'met' if worst_drop >= 3 else 'unmet'})"
    )
    verdict(acceptance_log, "C10 separation sweep", not violations, detail)
